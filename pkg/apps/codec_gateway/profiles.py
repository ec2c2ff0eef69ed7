import shlex
from dataclasses import replace
from typing import Dict, List, Mapping, Optional

from django.conf import settings

from apps.core.exceptions import JobConfigError

from .domain import EncoderProfile


def available_profiles() -> List[str]:
    return sorted(settings.ENCODER_PROFILES)


def profile_from_dict(name: str, payload: Mapping) -> EncoderProfile:
    try:
        return EncoderProfile(
            name=name,
            command_template=payload["command_template"],
            qp_list=tuple(payload["qp_list"]),
            frame_groups=tuple(payload.get("frame_groups", ("ALL",))),
            preset_ladder=tuple(payload.get("preset_ladder", ())),
            default_preset=payload.get("default_preset"),
            decode_command_template=payload.get("decode_command_template"),
            output_suffix=payload.get("output_suffix", ".bin"),
            stats_format=payload.get("stats_format", "csv"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise JobConfigError(f"invalid encoder profile {name!r}: {exc}") from exc


def load_profile(name: str, overrides: Optional[Mapping] = None) -> EncoderProfile:
    """Build a profile from settings.ENCODER_PROFILES, optionally overridden."""
    if name not in settings.ENCODER_PROFILES and not overrides:
        raise JobConfigError(
            f"unknown encoder profile {name!r}; available: {', '.join(available_profiles())}"
        )
    payload = dict(settings.ENCODER_PROFILES.get(name, {}))
    payload.update(overrides or {})
    return profile_from_dict(name, payload)


def with_preset(profile: EncoderProfile, preset: str) -> EncoderProfile:
    if profile.preset_ladder and preset not in profile.preset_ladder:
        raise JobConfigError(f"preset {preset!r} is not on the {profile.name} ladder")
    return replace(profile, preset=preset)


def render_command(template: str, values: Dict[str, object]) -> List[str]:
    """Tokenize the template first, then substitute inside each token.

    Substituted values never get re-split, so paths with spaces stay one
    argument and nothing goes through a shell.
    """
    argv = []
    for token in shlex.split(template):
        for key, value in values.items():
            token = token.replace("{" + key + "}", str(value))
        argv.append(token)
    return argv


def format_k(value: float) -> str:
    return f"{value:.6g}"
