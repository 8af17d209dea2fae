"""Resource caps shared by the enumerating engines."""

import os


class ResourceCapExceeded(RuntimeError):
    """An enumeration would exceed a configured size limit."""


def env_cap(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"{name} must be an integer, got {raw!r}") from exc
    if value <= 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def max_context() -> int:
    return env_cap("EPIMC_MAX_CONTEXT", 4096)


def max_worlds() -> int:
    return env_cap("EPIMC_MAX_WORLDS", 200_000)


def timeout_ms() -> int:
    return env_cap("EPIMC_TIMEOUT_MS", 600_000)


MAX_POOL_FORMULAS = 12
