"""Full-reference quality metrics on 8-bit clips."""

import math
from typing import Tuple

import numpy as np
from scipy import ndimage

from apps.core.exceptions import FrameGeometryError
from apps.video_io.domain import Clip

PEAK = 255.0
# Reported for identical inputs in place of +inf so the value serializes
PSNR_CAP = 99.0

MS_SSIM_WEIGHTS = np.array([0.0448, 0.2856, 0.3001, 0.2363, 0.1333])
WINDOW_SIZE = 11
WINDOW_SIGMA = 1.5
K1, K2 = 0.01, 0.03
C1 = (K1 * PEAK) ** 2
C2 = (K2 * PEAK) ** 2
MIN_MS_SSIM_SIZE = WINDOW_SIZE * 2 ** (len(MS_SSIM_WEIGHTS) - 1)  # 176


def _check_pair(reference: Clip, test: Clip):
    if reference.n_frames != test.n_frames:
        raise FrameGeometryError(
            f"clip length mismatch: {reference.n_frames} vs {test.n_frames} frames"
        )
    if (reference.width, reference.height) != (test.width, test.height):
        raise FrameGeometryError(
            f"clip size mismatch: {reference.width}x{reference.height} vs {test.width}x{test.height}"
        )


def mse_to_psnr(mse: float) -> float:
    if mse <= 0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(PEAK * PEAK / mse))


def _pooled_mse(ref_planes, test_planes) -> float:
    squared, count = 0, 0
    for ref, tst in zip(ref_planes, test_planes):
        diff = ref.astype(np.int64) - tst.astype(np.int64)
        squared += int(np.dot(diff.ravel(), diff.ravel()))
        count += diff.size
    return squared / count


def psnr(reference: Clip, test: Clip) -> float:
    """Luma PSNR with the MSE pooled over every sample of the clip."""
    _check_pair(reference, test)
    return mse_to_psnr(
        _pooled_mse((f.y for f in reference.frames), (f.y for f in test.frames))
    )


def plane_psnr(reference: Clip, test: Clip) -> Tuple[float, float, float]:
    """Pooled PSNR of the Y, U and V planes separately."""
    _check_pair(reference, test)
    return tuple(
        mse_to_psnr(
            _pooled_mse(
                (f.planes[i] for f in reference.frames),
                (f.planes[i] for f in test.frames),
            )
        )
        for i in range(3)
    )


def frame_plane_psnr(ref_frame, test_frame) -> Tuple[float, float, float]:
    return tuple(
        mse_to_psnr(_pooled_mse([r], [t])) for r, t in zip(ref_frame.planes, test_frame.planes)
    )


def _gaussian_window() -> np.ndarray:
    offsets = np.arange(WINDOW_SIZE) - WINDOW_SIZE // 2
    window = np.exp(-(offsets ** 2) / (2.0 * WINDOW_SIGMA ** 2))
    return window / window.sum()


_WINDOW = _gaussian_window()


def _filter_valid(image: np.ndarray) -> np.ndarray:
    out = ndimage.correlate1d(image, _WINDOW, axis=0, mode="reflect")
    out = ndimage.correlate1d(out, _WINDOW, axis=1, mode="reflect")
    half = WINDOW_SIZE // 2
    return out[half:-half, half:-half]


def _ssim_terms(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    mu_x = _filter_valid(x)
    mu_y = _filter_valid(y)
    mu_xx = mu_x * mu_x
    mu_yy = mu_y * mu_y
    mu_xy = mu_x * mu_y
    sigma_xx = _filter_valid(x * x) - mu_xx
    sigma_yy = _filter_valid(y * y) - mu_yy
    sigma_xy = _filter_valid(x * y) - mu_xy

    cs_map = (2.0 * sigma_xy + C2) / (sigma_xx + sigma_yy + C2)
    luminance = (2.0 * mu_xy + C1) / (mu_xx + mu_yy + C1)
    return float(np.mean(luminance * cs_map)), float(np.mean(cs_map))


def _halve(image: np.ndarray) -> np.ndarray:
    h, w = image.shape[0] // 2 * 2, image.shape[1] // 2 * 2
    image = image[:h, :w]
    return (image[0::2, 0::2] + image[0::2, 1::2] + image[1::2, 0::2] + image[1::2, 1::2]) / 4.0


def ms_ssim_frame(reference: np.ndarray, test: np.ndarray) -> float:
    if reference.shape != test.shape:
        raise FrameGeometryError(f"shape mismatch: {reference.shape} vs {test.shape}")
    height, width = reference.shape
    if height < MIN_MS_SSIM_SIZE or width < MIN_MS_SSIM_SIZE:
        raise FrameGeometryError(
            f"MS-SSIM needs luma of at least {MIN_MS_SSIM_SIZE}x{MIN_MS_SSIM_SIZE}, got {width}x{height}"
        )
    if np.array_equal(reference, test):
        return 1.0

    x = reference.astype(np.float64)
    y = test.astype(np.float64)
    score = 1.0
    levels = len(MS_SSIM_WEIGHTS)
    for level, weight in enumerate(MS_SSIM_WEIGHTS):
        ssim, cs = _ssim_terms(x, y)
        if level == levels - 1:
            score *= max(ssim, 0.0) ** weight
        else:
            score *= max(cs, 0.0) ** weight
            x, y = _halve(x), _halve(y)
    return float(score)


def ms_ssim(reference: Clip, test: Clip) -> float:
    """Five-scale luma MS-SSIM, averaged over frames."""
    _check_pair(reference, test)
    scores = [ms_ssim_frame(r.y, t.y) for r, t in zip(reference.frames, test.frames)]
    return float(np.mean(scores))


def measure(metric, reference: Clip, test: Clip) -> float:
    from .domain import QualityMetric

    metric = QualityMetric.parse(metric)
    if metric is QualityMetric.PSNR:
        return psnr(reference, test)
    return ms_ssim(reference, test)
