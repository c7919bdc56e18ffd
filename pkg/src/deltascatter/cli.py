"""Command-line front end: energy sweeps, per-order tables and oracle comparisons.

    deltascatter amplitudes --config run.cfg [--out rows.csv]
    deltascatter series     --config run.cfg
    deltascatter compare    --config run.cfg

Exit status: 0 success, 1 configuration error, 2 partial numerical failure
(pole, oracle failure), 3 divergent series without acceleration.
"""

from __future__ import annotations

import argparse
import io
import sys
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import born, oracle
from .born import Barrier, Delta, DeltaComb, PotentialSpec
from .propagator import Kinematics

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_DIVERGENT = 0, 1, 2, 3

SWEEP_HEADER = "E,p,re_t,im_t,re_r,im_r,T,R,unitarity_residual,method,order"
SERIES_HEADER = "E,p,order,re_t_n,im_t_n,re_r_n,im_r_n,re_t,im_t,re_r,im_r,T,R,error,method"
COMPARE_HEADER = ("E,p,form,re_t_paper,im_t_paper,T_paper,re_t_tm,im_t_tm,T_tm,"
                  "re_t_ode,im_t_ode,T_ode,ode_error,dev_t,dev_T,dev_oracles,status")

# order column value for all-orders (resummed) rows
ALL_ORDERS = -1


class ConfigError(ValueError):
    pass


class ConfigParseError(ConfigError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class ConfigValidationError(ConfigError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class GridConfig:
    e_min: float
    e_max: float
    n_points: int = 1
    spacing: str = "linear"
    allow_evanescent: bool = False

    def energies(self) -> np.ndarray:
        if self.n_points == 1:
            return np.array([self.e_min])
        if self.spacing == "log":
            return np.geomspace(self.e_min, self.e_max, self.n_points)
        return np.linspace(self.e_min, self.e_max, self.n_points)


@dataclass(frozen=True)
class SeriesConfig:
    max_order: int = 16
    acceleration: str = "none"
    barrier_form: str = "series"


@dataclass(frozen=True)
class RunConfig:
    potential: PotentialSpec
    mass: float
    grid: GridConfig
    series: SeriesConfig = field(default_factory=SeriesConfig)
    paper_sign: bool = False
    output: Optional[str] = None


_KEYS = {
    "potential.kind", "potential.alpha", "potential.position", "potential.alphas",
    "potential.positions", "potential.height", "potential.width", "potential.start",
    "mass", "grid.e_min", "grid.e_max", "grid.n_points", "grid.spacing",
    "grid.allow_evanescent", "series.max_order", "series.acceleration",
    "series.barrier_form", "convention.paper_sign",
}
_KIND_KEYS = {
    "delta": {"potential.alpha", "potential.position"},
    "comb": {"potential.alphas", "potential.positions"},
    "barrier": {"potential.height", "potential.width", "potential.start"},
}


def _float(raw: dict, key: str, default=None) -> float:
    if key not in raw:
        if default is None:
            raise ConfigValidationError(key, "missing")
        return default
    try:
        v = float(raw[key])
    except ValueError:
        raise ConfigValidationError(key, f"not a number: {raw[key]!r}") from None
    if not np.isfinite(v):
        raise ConfigValidationError(key, "must be finite")
    return v


def _int(raw: dict, key: str, default: int) -> int:
    if key not in raw:
        return default
    try:
        return int(raw[key])
    except ValueError:
        raise ConfigValidationError(key, f"not an integer: {raw[key]!r}") from None


def _bool(raw: dict, key: str) -> bool:
    v = raw.get(key, "false").lower()
    if v not in ("true", "false"):
        raise ConfigValidationError(key, f"expected true or false, got {v!r}")
    return v == "true"


def _floats(raw: dict, key: str) -> tuple:
    if key not in raw:
        raise ConfigValidationError(key, "missing")
    try:
        return tuple(float(x) for x in raw[key].split(","))
    except ValueError:
        raise ConfigValidationError(key, f"not a comma-separated list of numbers: {raw[key]!r}") from None


def _choice(raw: dict, key: str, options: tuple, default: str) -> str:
    v = raw.get(key, default)
    if v not in options:
        raise ConfigValidationError(key, f"expected one of {', '.join(options)}, got {v!r}")
    return v


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines (``#`` starts a comment) into a RunConfig."""
    raw: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(lineno, f"expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigParseError(lineno, f"unknown key {key!r}")
        if key in raw:
            raise ConfigParseError(lineno, f"duplicate key {key!r}")
        if not value:
            raise ConfigParseError(lineno, f"empty value for {key!r}")
        raw[key] = value

    if "potential.kind" not in raw:
        raise ConfigValidationError("potential.kind", "missing")
    kind = _choice(raw, "potential.kind", tuple(_KIND_KEYS), "")
    stray = {k for k in raw if k.startswith("potential.") and k != "potential.kind"} - _KIND_KEYS[kind]
    if stray:
        raise ConfigValidationError(sorted(stray)[0], f"not used by potential.kind = {kind}")
    if kind == "delta":
        pot = Delta(_float(raw, "potential.alpha"), _float(raw, "potential.position", 0.0))
    elif kind == "comb":
        alphas, positions = _floats(raw, "potential.alphas"), _floats(raw, "potential.positions")
        if len(alphas) != len(positions):
            raise ConfigValidationError("potential.positions", "length differs from potential.alphas")
        if any(b <= a for a, b in zip(positions, positions[1:])):
            raise ConfigValidationError("potential.positions", "must be strictly increasing")
        pot = DeltaComb(alphas, positions)
    else:
        width = _float(raw, "potential.width")
        if not width > 0:
            raise ConfigValidationError("potential.width", "must be positive")
        pot = Barrier(_float(raw, "potential.height"), width, _float(raw, "potential.start", 0.0))

    mass = _float(raw, "mass")
    if not mass > 0:
        raise ConfigValidationError("mass", "must be positive")

    n_points = _int(raw, "grid.n_points", 1)
    if n_points < 1:
        raise ConfigValidationError("grid.n_points", "must be at least 1")
    e_min = _float(raw, "grid.e_min")
    if not e_min > 0:
        raise ConfigValidationError("grid.e_min", "must be positive")
    if n_points == 1 and "grid.e_max" not in raw:
        e_max = e_min
    else:
        e_max = _float(raw, "grid.e_max")
        if not (e_max > e_min or (n_points == 1 and e_max == e_min)):
            raise ConfigValidationError("grid.e_max", "must exceed grid.e_min")
    grid = GridConfig(e_min, e_max, n_points,
                      _choice(raw, "grid.spacing", ("linear", "log"), "linear"),
                      _bool(raw, "grid.allow_evanescent"))
    if isinstance(pot, Barrier) and e_min <= pot.height and not grid.allow_evanescent:
        raise ConfigValidationError("grid.e_min", f"must exceed the wall height {pot.height} "
                                    "unless grid.allow_evanescent = true")

    series = SeriesConfig(_int(raw, "series.max_order", 16),
                          _choice(raw, "series.acceleration", ("none", "shanks", "pade"), "none"),
                          _choice(raw, "series.barrier_form", ("series", "printed"), "series"))
    if not 0 <= series.max_order <= born.MAX_ORDER:
        raise ConfigValidationError("series.max_order", f"must lie in [0, {born.MAX_ORDER}]")
    if series.acceleration != "none" and series.max_order < 2:
        raise ConfigValidationError("series.max_order", "acceleration needs max_order >= 2")

    return RunConfig(pot, mass, grid, series, _bool(raw, "convention.paper_sign"))


# --- evaluation -----------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if np.isnan(x):
        return "nan"
    return f"{x:.16e}"


def _row(*values) -> str:
    return ",".join(_fmt(v) for v in values)


def _signed(cfg: RunConfig) -> PotentialSpec:
    """Potential under `convention.paper_sign` (Lambda -> -Lambda, i.e. V -> -V)."""
    pot = cfg.potential
    if not cfg.paper_sign:
        return pot
    if isinstance(pot, Delta):
        return replace(pot, alpha=-pot.alpha)
    if isinstance(pot, DeltaComb):
        return DeltaComb(tuple(-a for a in pot.alphas), pot.positions)
    return pot


def kernel_for(cfg: RunConfig, kin: Kinematics, form: Optional[str] = None) -> born.SeriesKernel:
    pot = cfg.potential
    if isinstance(pot, Delta):
        k = born.delta_kernel(kin, pot)
    elif isinstance(pot, Barrier):
        form = form or cfg.series.barrier_form
        k = born.barrier_kernel(kin, pot) if form == "printed" else born.barrier_channel_kernel(kin, pot)
    else:
        raise TypeError("combs have no scalar kernel")
    return born.with_paper_sign(k) if cfg.paper_sign else k


def resummed(cfg: RunConfig, kin: Kinematics, form: Optional[str] = None) -> born.ScatteringAmplitudes:
    if isinstance(cfg.potential, DeltaComb):
        return born.comb_solve(kin, _signed(cfg))
    return born.resum_closed(kernel_for(cfg, kin, form))


def cmd_amplitudes(cfg: RunConfig) -> tuple[list[str], int]:
    lines, status = [SWEEP_HEADER], EXIT_OK
    method = "comb_solve" if isinstance(cfg.potential, DeltaComb) else "closed_form"
    for E in cfg.grid.energies():
        kin = Kinematics(cfg.mass, float(E))
        try:
            amp = resummed(cfg, kin)
        except born.PoleError:
            nan = float("nan")
            lines.append(_row(E, kin.momentum, nan, nan, nan, nan, nan, nan, nan, "pole", ALL_ORDERS))
            status = EXIT_NUMERIC
            continue
        T, R = abs(amp.t) ** 2, abs(amp.r) ** 2
        lines.append(_row(E, kin.momentum, amp.t.real, amp.t.imag, amp.r.real, amp.r.imag,
                          T, R, abs(T + R - 1.0), method, ALL_ORDERS))
    return lines, status


def _series_report(cfg: RunConfig, kin: Kinematics) -> born.SeriesReport:
    N = cfg.series.max_order
    if isinstance(cfg.potential, DeltaComb):
        return born.comb_series(kin, _signed(cfg), N)
    return born.partial_sum(kernel_for(cfg, kin), N)


def cmd_series(cfg: RunConfig) -> tuple[list[str], int]:
    lines, status, notes = [SERIES_HEADER], EXIT_OK, []
    acc = cfg.series.acceleration
    nan = float("nan")
    for E in cfg.grid.energies():
        kin = Kinematics(cfg.mass, float(E))
        rep = _series_report(cfg, kin)
        closed = rep.closed_form
        if closed is None:
            status = EXIT_NUMERIC
            notes.append(f"# pole: closed form undefined at E={_fmt(E)}")
        for term, s in zip(rep.terms, rep.partial_sums):
            err = abs(s.t - closed.t) if closed is not None else nan
            lines.append(_row(E, kin.momentum, term.order, term.t.real, term.t.imag, term.r.real,
                              term.r.imag, s.t.real, s.t.imag, s.r.real, s.r.imag, s.T, s.R, err,
                              "partial"))
        if acc != "none":
            try:
                a = born.accelerate(rep, acc)
                err = abs(a.t - closed.t) if closed is not None else nan
                lines.append(_row(E, kin.momentum, rep.max_order, None, None, None, None, a.t.real,
                                  a.t.imag, a.r.real, a.r.imag, a.T, a.R, err, acc))
            except (born.AccelerationDegenerateError, born.PoleError) as exc:
                status = EXIT_NUMERIC
                lines.append(_row(E, kin.momentum, rep.max_order, None, None, None, None,
                                  nan, nan, nan, nan, nan, nan, nan, acc))
                notes.append(f"# acceleration failed at E={_fmt(E)}: {exc}")
        elif rep.divergent:
            if status == EXIT_OK:
                status = EXIT_DIVERGENT
            notes.append(f"# divergent: ratio {_fmt(rep.ratio)} >= 1 at E={_fmt(E)}; "
                         "partial sums do not converge (set series.acceleration)")
    return lines + notes, status


def _forms(cfg: RunConfig) -> list[str]:
    if isinstance(cfg.potential, Barrier):
        return ["series", "printed"]
    return ["comb_solve" if isinstance(cfg.potential, DeltaComb) else "closed_form"]


def cmd_compare(cfg: RunConfig) -> tuple[list[str], int]:
    lines, status = [COMPARE_HEADER], EXIT_OK
    nan = float("nan")
    worst: dict = {}
    worst_oracles = 0.0
    for E in cfg.grid.energies():
        kin = Kinematics(cfg.mass, float(E))
        try:
            tm = oracle.tm_solve(kin, cfg.potential)
            ode = oracle.ode_solve(kin, cfg.potential)
            dev_or = abs(tm.t - ode.t)
            worst_oracles = max(worst_oracles, dev_or)
        except (oracle.TransmissionPoleError, oracle.OdeAccuracyError):
            tm = ode = None
        for form in _forms(cfg):
            row_status = "ok"
            try:
                amp = resummed(cfg, kin, form)
                tp = amp.t
            except born.PoleError:
                tp, row_status = complex(nan, nan), "pole"
            if tm is None:
                row_status = "oracle_failure"
                lines.append(_row(E, kin.momentum, form, tp.real, tp.imag, abs(tp) ** 2,
                                  nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, row_status))
                status = EXIT_NUMERIC
                continue
            if row_status != "ok":
                status = EXIT_NUMERIC
            dev_t, dev_T = abs(tp - tm.t), abs(abs(tp) ** 2 - tm.T)
            if row_status == "ok":
                w = worst.setdefault(form, [0.0, 0.0])
                w[0], w[1] = max(w[0], dev_t), max(w[1], dev_T)
            lines.append(_row(E, kin.momentum, form, tp.real, tp.imag, abs(tp) ** 2,
                              tm.t.real, tm.t.imag, tm.T, ode.t.real, ode.t.imag, ode.T, ode.error,
                              dev_t, dev_T, abs(tm.t - ode.t), row_status))
    for form, (dt, dT) in worst.items():
        lines.append(f"# max dev_t[{form}] = {_fmt(dt)}")
        lines.append(f"# max dev_T[{form}] = {_fmt(dT)}")
    lines.append(f"# max dev_oracles = {_fmt(worst_oracles)}")
    return lines, status


COMMANDS = {"amplitudes": cmd_amplitudes, "series": cmd_series, "compare": cmd_compare}


def run(command: str, cfg: RunConfig) -> tuple[str, int]:
    lines, status = COMMANDS[command](cfg)
    return "\n".join(lines) + "\n", status


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors are configuration errors, not argparse's status 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def main(argv=None) -> int:
    parser = _Parser(prog="deltascatter", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="key = value run configuration")
    parser.add_argument("--out", default=None, help="CSV destination (default stdout)")
    args = parser.parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = replace(parse_config(fh.read()), output=args.out)
    except (OSError, ConfigError) as exc:
        print(f"deltascatter: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text, status = run(args.command, cfg)
    if cfg.output:
        with io.open(cfg.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
