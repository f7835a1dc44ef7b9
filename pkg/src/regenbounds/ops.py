"""Operations shared by the command-line tool and the HTTP service.

Each command returns (exit_code, output_text): 0 on success, 1 when a
verification ran and failed, 2 for bad input (unparseable, infeasible, or
unknown identifiers).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Tuple

from .codes import (
    build_congruence_family,
    builtin_code_423,
    builtin_code_433,
    verify_parity_structure,
    verify_recovery,
    verify_repair,
)
from .core import (
    ParameterRangeError,
    SystemParams,
    VerificationReport,
    make_report,
)
from .formats import (
    bound_from_obj,
    bound_to_obj,
    bounds_csv,
    code_spec_from_obj,
    dumps_canonical,
    envelope_csv,
    envelope_json,
    parse_json,
    render_bounds_json,
    render_code_spec,
    render_report,
    report_obj,
    tradeoff_csv,
    tradeoff_json,
)
from .generators import (
    EnumerationLimits,
    enumerate_bounds,
    verify_certificate,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_ERROR = 2

THREADS_ENV_VAR = "REGEN_BOUNDS_THREADS"

COMMANDS = (
    "bounds", "envelope", "tradeoff", "certify", "construct", "verify",
    "serve",
)


def thread_count_from_env(environ=None) -> int:
    """Validated worker count from the environment; the engine currently
    runs sequentially, but a bad setting is still rejected up front."""
    env = os.environ if environ is None else environ
    raw = env.get(THREADS_ENV_VAR)
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ParameterRangeError(
            f"{THREADS_ENV_VAR} must be a positive integer, got {raw!r}"
        ) from None
    if value < 1:
        raise ParameterRangeError(
            f"{THREADS_ENV_VAR} must be a positive integer, got {raw!r}"
        )
    return value


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for one command invocation.

    ``alpha`` and ``beta`` are accepted wherever given on the command line
    and validated, for point evaluations through the library; the file
    artifacts themselves are parameter-free.
    """

    command: str
    k: int
    d: int
    alpha: Optional[Fraction] = None
    beta: Optional[Fraction] = None
    caps: EnumerationLimits = field(default_factory=EnumerationLimits)
    mode: Optional[str] = None
    output_format: str = "csv"
    output_path: Optional[str] = None
    family: Optional[str] = None
    builtin: Optional[str] = None
    threads: int = 1

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ParameterRangeError(f"unknown command {self.command!r}")
        SystemParams(self.k, self.d)
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if value is not None:
                value = Fraction(value)
                if value < 0:
                    raise ParameterRangeError(f"{name} must be >= 0")
                object.__setattr__(self, name, value)
        if self.mode not in (None, "as-stated", "derived"):
            raise ParameterRangeError(f"unknown mode {self.mode!r}")
        if self.output_format not in ("json", "csv"):
            raise ParameterRangeError(
                f"output format must be json or csv, got {self.output_format!r}"
            )
        if not isinstance(self.threads, int) or self.threads < 1:
            raise ParameterRangeError("threads must be a positive integer")

    @property
    def params(self) -> SystemParams:
        return SystemParams(self.k, self.d)


def cmd_bounds(config: RunConfig) -> Tuple[int, str]:
    params = config.params
    result = enumerate_bounds(params, config.caps, config.mode)
    if config.output_format == "csv":
        return EXIT_OK, bounds_csv(params, result)
    return EXIT_OK, render_bounds_json(params, result)


def cmd_envelope(config: RunConfig) -> Tuple[int, str]:
    result = enumerate_bounds(config.params, config.caps, config.mode)
    if config.output_format == "json":
        return EXIT_OK, envelope_json(result.bounds)
    return EXIT_OK, envelope_csv(result.bounds)


def cmd_tradeoff(config: RunConfig) -> Tuple[int, str]:
    result = enumerate_bounds(config.params, config.caps, config.mode)
    if config.output_format == "json":
        return EXIT_OK, tradeoff_json(result.bounds)
    return EXIT_OK, tradeoff_csv(result.bounds)


def cmd_certify(config: RunConfig, bound_id: str) -> Tuple[int, str]:
    result = enumerate_bounds(config.params, config.caps, config.mode)
    for bound in result.bounds:
        if bound.bound_id == bound_id:
            report = verify_certificate(bound)
            text = dumps_canonical(
                {"bound": bound_to_obj(bound), "report": report_obj(report)}
            )
            return (EXIT_OK if report.ok else EXIT_FAIL), text
    return EXIT_ERROR, f"no generated bound has id {bound_id!r}\n"


_BUILTIN_CODES = {"423": builtin_code_423, "433": builtin_code_433}


def cmd_construct(config: RunConfig) -> Tuple[int, str]:
    if config.builtin is not None:
        maker = _BUILTIN_CODES.get(config.builtin)
        if maker is None:
            return EXIT_ERROR, (
                f"unknown builtin {config.builtin!r}; "
                f"have {', '.join(sorted(_BUILTIN_CODES))}\n"
            )
        return EXIT_OK, render_code_spec(maker())
    if config.family != "congruence":
        return EXIT_ERROR, (
            f"unknown family {config.family!r}; have congruence\n"
        )
    return EXIT_OK, render_code_spec(build_congruence_family(config.d))


def verify_code_spec_fully(spec) -> VerificationReport:
    """Recovery, repair, and (when parity is present) structure checks,
    merged into one report."""
    checks = list(verify_recovery(spec).checks)
    checks += list(verify_repair(spec).checks)
    if spec.parity is not None:
        checks += list(verify_parity_structure(spec).checks)
    return make_report(tuple(checks))


def cmd_verify(config: RunConfig, spec_text: str) -> Tuple[int, str]:
    obj = parse_json(spec_text)
    if not isinstance(obj, dict):
        return EXIT_ERROR, "expected a JSON object\n"
    if "generator" in obj:
        spec = code_spec_from_obj(obj)
        report = verify_code_spec_fully(spec)
    elif "c" in obj:
        report = verify_certificate(bound_from_obj(obj))
    else:
        return EXIT_ERROR, (
            "expected a code spec (generator key) or a bound (c key)\n"
        )
    return (EXIT_OK if report.ok else EXIT_FAIL), render_report(report)
