import argparse
import os
import sys
from pathlib import Path

import django

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
os.environ.setdefault("DJANGO_SETTINGS_MODULE", "config.settings.development")
django.setup()

from apps.core.artifacts import write_csv
from apps.load_predict.complexity import samples_to_frame
from apps.load_predict.synthetic import generate_time_corpus
from apps.video_io.patterns import textured_clip
from apps.video_io.y4m import write_y4m_file


def make_clips(directory, n=4, seed=0):
    paths = []
    for i in range(n):
        clip = textured_clip(width=176, height=144, n_frames=12, seed=seed + i, source_id=f"demo{i + 1}")
        paths.append(write_y4m_file(directory / f"{clip.source_id}.y4m", clip))
    return paths


def make_time_corpus(directory, n=500, seed=0, noise=0.1):
    samples = generate_time_corpus(n, seed=seed, noise_sigma=noise)
    return write_csv(directory / "time_corpus.csv", samples_to_frame(samples))


def main():
    parser = argparse.ArgumentParser(description="Write demo Y4M clips and a synthetic encode-time corpus")
    parser.add_argument("directory", nargs="?", default="demo-data")
    parser.add_argument("--clips", type=int, default=4)
    parser.add_argument("--samples", type=int, default=500)
    parser.add_argument("--noise", type=float, default=0.1)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    directory = Path(args.directory)
    directory.mkdir(parents=True, exist_ok=True)
    clips = make_clips(directory, args.clips, args.seed)
    corpus = make_time_corpus(directory, args.samples, args.seed, args.noise)
    print(f"Wrote {len(clips)} clips and {corpus}")


if __name__ == "__main__":
    main()
