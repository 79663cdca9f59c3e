"""Synthetic ELSA-like survey table with planted non-response effects.

Features are drawn independently from fixed marginals (cohort, interview
mode, living place, smoking and urbanity follow the wave-1 counts). The
label comes from a logistic model over the planted per-level log-odds
shifts; the intercept is solved so that the expected positive rate over
the drawn rows equals ``positive_rate``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from .errors import UsageError
from .seeding import rng
from .tabular import MISSING_CODE, Table, bundled_schema

# level -> weight; unlisted yes/no features use DEFAULT_PREVALENCE for "yes"
MARGINALS = {
    "cohort": {"1": 2819, "3": 631, "4": 1108, "6": 489, "7": 168, "9": 605},
    "interview_mode": {"phone": 1135, "web": 4685},
    "region": {
        "east_midlands": 9, "east_of_england": 12, "london": 9, "north_east": 5,
        "north_west": 11, "scotland": 2, "south_east": 16, "south_west": 11,
        "wales": 2, "west_midlands": 10, "yorkshire": 9,
    },
    "rural_urban": {"rural": 1574, "urban": 4246},
    "living_place": {"home": 5729, "care_home": 6, "hospital": 2, "other_home": 54, "somewhere_else": 29},
    "smoker": {"no": 5419, "yes": 401},
    "sex": {"female": 55, "male": 45},
    "marital_status": {"divorced": 10, "married": 62, "single": 8, "widowed": 20},
    "household_size": {"1": 28, "2": 55, "3": 11, "4plus": 6},
    "employment": {
        "employed": 18, "looking_after_family": 4, "other": 3, "retired": 64,
        "self_employed": 6, "sick_disabled": 4, "unemployed": 1,
    },
    "employment_pre_covid": {
        "employed": 23, "looking_after_family": 3, "other": 3, "retired": 60,
        "self_employed": 7, "sick_disabled": 3, "unemployed": 1,
    },
    "physical_activity": {"less": 38, "more": 14, "same": 48},
    "self_rated_health": {"excellent": 12, "fair": 22, "good": 33, "poor": 7, "very_good": 26},
    "covid_positive": {"no": 93, "unsure": 5, "yes": 2},
    "loneliness": {"hardly_ever": 62, "often": 8, "some_of_the_time": 30},
    "internet_use": {"daily": 70, "never": 12, "rarely": 6, "weekly": 12},
}
PREVALENCE = {
    "covid_test": 0.12, "covid_hospital": 0.01, "shielding": 0.15, "fever": 0.05,
    "cough": 0.10, "breath_short": 0.06, "fatigue": 0.12, "high_blood_pressure": 0.40,
    "heart_disease": 0.12, "diabetes": 0.12, "lung_disease": 0.08, "asthma": 0.12,
    "arthritis": 0.35, "osteoporosis": 0.08, "cancer": 0.06, "dementia": 0.10,
    "parkinsons": 0.01, "stroke": 0.03, "ear_disease": 0.06, "eye_disease": 0.15,
    "depression": 0.10, "disability": 0.20, "financial_worry": 0.15, "caring_role": 0.12,
    "volunteering": 0.15, "received_help": 0.18,
}
DEFAULT_PREVALENCE = 0.08
AGE_MEAN, AGE_SD, AGE_MIN, AGE_MAX = 69.0, 8.5, 52.0, 99.0

# Phone interviews lift non-response to about 0.20 against 0.05 online.
# Dementia is rare; within it, interview mode decides which side of 0.5 a row falls.
DEFAULT_EFFECTS = (
    ("interview_mode", (("phone", 1.9), ("web", 0.0))),
    ("dementia", (("yes", 2.9),)),
    ("disability", (("yes", 0.7),)),
    ("living_place", (("care_home", 2.0), ("hospital", 2.0), ("somewhere_else", 1.0))),
)


@dataclass(frozen=True)
class SyntheticConfig:
    n_rows: int = 5820
    positive_rate: float = 0.083
    effects: tuple = DEFAULT_EFFECTS
    seed: int = 0
    missing_rate: float = 0.01

    def __post_init__(self):
        if self.n_rows < 1:
            raise UsageError("n_rows must be >= 1")
        if not 0.0 < self.positive_rate < 1.0:
            raise UsageError("positive_rate must lie in (0,1)")
        if not 0.0 <= self.missing_rate < 1.0:
            raise UsageError("missing_rate must lie in [0,1)")
        # normalise mappings to hashable tuples
        effects = tuple(
            (str(name), tuple(sorted(dict(shifts).items()))) for name, shifts in self.effects
        )
        object.__setattr__(self, "effects", effects)


def _level_probs(spec):
    if spec.name in MARGINALS:
        weights = MARGINALS[spec.name]
        w = np.array([float(weights.get(level, 0.0)) for level in spec.levels])
    elif spec.levels == ("no", "yes"):
        p = PREVALENCE.get(spec.name, DEFAULT_PREVALENCE)
        w = np.array([1.0 - p, p])
    else:
        w = np.ones(len(spec.levels))
    return w / w.sum()


def _calibrate_intercept(eta, rate):
    """Intercept b with mean(sigmoid(b + eta)) == rate."""
    f = lambda b: float(np.mean(expit(b + eta))) - rate  # noqa: E731
    lo, hi = -60.0, 60.0
    return brentq(f, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=500)


def synth_generate(config: SyntheticConfig = SyntheticConfig()) -> Table:
    schema = bundled_schema()
    by_name = {c.name: c for c in schema}
    for name, shifts in config.effects:
        spec = by_name.get(name)
        if spec is None or spec.role != "feature":
            raise UsageError(f"unknown planted feature {name!r}")
        if not spec.is_categorical:
            raise UsageError(f"planted feature {name!r} must be categorical")
        for level, _ in shifts:
            if level not in spec.levels:
                raise UsageError(f"planted feature {name!r} has no level {level!r}")

    n = config.n_rows
    gen = rng(config.seed, 10)
    cols = {}
    for spec in schema:
        if spec.role == "id":
            cols[spec.name] = np.arange(100001, 100001 + n, dtype=np.float64)
        elif spec.role == "target":
            continue
        elif spec.is_categorical:
            cols[spec.name] = gen.choice(len(spec.levels), size=n, p=_level_probs(spec)).astype(np.int32)
        else:
            age = np.round(gen.normal(AGE_MEAN, AGE_SD, size=n))
            cols[spec.name] = np.clip(age, AGE_MIN, AGE_MAX)

    eta = np.zeros(n)
    for name, shifts in config.effects:
        table = np.zeros(len(by_name[name].levels))
        for level, shift in shifts:
            table[by_name[name].code_of(level)] = float(shift)
        eta += table[cols[name]]
    intercept = _calibrate_intercept(eta, config.positive_rate)
    p = expit(intercept + eta)
    target = _target_name(schema)
    cols[target] = (rng(config.seed, 11).random(n) < p).astype(np.int32)

    if config.missing_rate > 0:
        miss_gen = rng(config.seed, 12)
        for spec in schema:
            if spec.role != "feature":
                continue
            hole = miss_gen.random(n) < config.missing_rate
            if spec.is_categorical:
                cols[spec.name] = np.where(hole, MISSING_CODE, cols[spec.name]).astype(np.int32)
            else:
                cols[spec.name] = np.where(hole, np.nan, cols[spec.name])
    return Table(schema, cols)


def _target_name(schema):
    return next(c.name for c in schema if c.role == "target")
