"""Cached simulation runs shared by several test modules (one process)."""

import functools

from kdvb_shock import Convention, RunSettings, normalized_params, simulate_family
from kdvb_shock.profile import build_profile

PARAMS = normalized_params(1.0, 0.2, 1.0)
ACCEPTANCE_FAMILIES = ("pulse-large", "shifted-profile", "shifted-profile-neg",
                       "random-smooth")


@functools.lru_cache(maxsize=None)
def reference_profile():
    return build_profile(PARAMS)


@functools.lru_cache(maxsize=None)
def family_run(family: str, convention: str = "energy_consistent", n: int = 4096,
               T: float = 50.0):
    settings = RunSettings(T=T, convention=Convention.parse(convention))
    return simulate_family(PARAMS, family, n=n, settings=settings,
                           profile=reference_profile())
