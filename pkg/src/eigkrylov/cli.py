"""Command-line front end.

Subcommands
-----------
run       one eigensolver run, writing CSV tables into ``--out``
compare   several runs on the same problem, one row each in ``comparison.csv``
spectrum  print the eigenvalues nearest a point to help place the shift

Exit codes: 0 success, 1 configuration or input error, 2 numerical
breakdown, 3 outer iteration did not converge.
"""

import argparse
import os
import shutil
import sys
import tempfile
from dataclasses import dataclass, field, fields

import numpy as np

from .dense import EigenBasis, read_eigb
from .eigsolvers import ProblemSpec, inverse_iteration, subspace_iteration
from .exceptions import (
    BreakdownError,
    DegreeTooHighError,
    InvalidEnvelopeError,
    MatrixMarketError,
    PivotBreakdownError,
    ShiftEqualsEigenvalueError,
    SingularMatrixError,
    SpectrumStraddlesOriginError,
    TuningSingularError,
)
from .preconditioners import IluPreconditioner, PolynomialPreconditioner, TunedPreconditioner
from .sparse import gen_convdiff, mm_read

EXIT_OK, EXIT_CONFIG, EXIT_BREAKDOWN, EXIT_NOCONV = 0, 1, 2, 3
PRECONDS = ("none", "ilu", "tuned-i", "tuned-a", "tuned-b", "tuned-l", "poly")
EMITS = ("summary", "outer", "inner", "weights")
DENSE_DIAG_LIMIT = 4096

NUMERICAL_ERRORS = (
    BreakdownError,
    PivotBreakdownError,
    TuningSingularError,
    SingularMatrixError,
    SpectrumStraddlesOriginError,
    DegreeTooHighError,
    ShiftEqualsEigenvalueError,
    InvalidEnvelopeError,
    ArithmeticError,
    np.linalg.LinAlgError,
)


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    gen: tuple = None
    matrix: str = None
    mass: str = None
    eig: str = None
    sigma: complex = None
    delta: float = 0.1
    max_outer: int = 50
    outer_tol: float = 1e-10
    precond: str = "none"
    droptol: float = 1e-2
    degree: int = 10
    poly_scheme: str = "cheb"
    block: int = 1
    emit: tuple = ("summary", "outer")
    diag: str = "auto"
    inner_max_it: int = None
    interval: tuple = None
    out: str = "."
    extra: dict = field(default_factory=dict, repr=False)

    def validate(self):
        if (self.gen is None) == (self.matrix is None):
            raise ConfigError("exactly one problem source is required: --gen or --matrix")
        if self.sigma is None:
            raise ConfigError("--sigma is required (the shift is always user-supplied)")
        if self.precond not in PRECONDS:
            raise ConfigError(f"--precond must be one of {', '.join(PRECONDS)}, got {self.precond!r}")
        if self.poly_scheme not in ("cheb", "contour"):
            raise ConfigError(f"--poly-scheme must be cheb or contour, got {self.poly_scheme!r}")
        if self.block < 1:
            raise ConfigError(f"--block must be >= 1, got {self.block}")
        if self.block > 1 and self.mass is not None:
            raise ConfigError("block runs support the standard problem only (no --mass)")
        if self.max_outer < 1:
            raise ConfigError(f"--max-outer must be >= 1, got {self.max_outer}")
        if not self.delta > 0:
            raise ConfigError(f"--delta must be positive, got {self.delta}")
        if self.droptol < 0:
            raise ConfigError(f"--droptol must be >= 0, got {self.droptol}")
        if self.degree < 0:
            raise ConfigError(f"--degree must be >= 0, got {self.degree}")
        if self.diag not in ("auto", "operator", "fixed", "off"):
            raise ConfigError(f"--diag must be auto, operator, fixed or off, got {self.diag!r}")
        bad = [e for e in self.emit if e not in EMITS]
        if bad:
            raise ConfigError(f"unknown --emit entries {bad}; choose from {', '.join(EMITS)}")
        return self

    def problem_key(self):
        return (self.gen, self.matrix, self.mass, self.eig)


# ---------------------------------------------------------------- parsing


def _parse_sigma(text):
    parts = [p.strip() for p in str(text).split(",")]
    try:
        if len(parts) == 1:
            return float(parts[0])
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise ConfigError(f"--sigma expects RE or RE,IM, got {text!r}")


def _parse_gen(text):
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 7:
        raise ConfigError(f"--gen expects m,ax,bx,gx,ay,by,gy, got {text!r}")
    try:
        return (int(parts[0]),) + tuple(float(p) for p in parts[1:])
    except ValueError:
        raise ConfigError(f"--gen expects numbers, got {text!r}") from None


def _parse_interval(text):
    parts = [p.strip() for p in str(text).split(",")]
    try:
        a, b = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"--interval expects a,b, got {text!r}") from None
    return (a, b)


def _parse_emit(text):
    if isinstance(text, (tuple, list)):
        return tuple(text)
    items = tuple(t.strip() for t in str(text).split(",") if t.strip())
    if items == ("all",):
        return EMITS
    return items


_CONVERTERS = {
    "gen": _parse_gen,
    "sigma": _parse_sigma,
    "delta": float,
    "max_outer": int,
    "outer_tol": float,
    "droptol": float,
    "degree": int,
    "block": int,
    "emit": _parse_emit,
    "inner_max_it": int,
    "interval": _parse_interval,
}
_KEYS = {f.name for f in fields(RunConfig)} - {"extra"}


def read_config_file(path):
    """Parse a plain-text ``key=value`` file (``#`` comments, dashes or underscores in keys)."""
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, value = (s.strip() for s in line.split("=", 1))
                key = key.replace("-", "_")
                if key not in _KEYS:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
                values[key] = value
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    return values


def build_config(file_values, flag_values):
    """Merge config-file values with command-line flags (flags win) into a RunConfig."""
    merged = dict(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    kwargs = {}
    for key, value in merged.items():
        conv = _CONVERTERS.get(key)
        try:
            kwargs[key] = conv(value) if conv is not None and isinstance(value, str) else value
        except ValueError:
            raise ConfigError(f"bad value for {key}: {value!r}") from None
    if "gen" in kwargs and isinstance(kwargs["gen"], str):
        kwargs["gen"] = _parse_gen(kwargs["gen"])
    if "sigma" in kwargs and isinstance(kwargs["sigma"], str):
        kwargs["sigma"] = _parse_sigma(kwargs["sigma"])
    return RunConfig(**kwargs).validate()


def _add_run_flags(p):
    p.add_argument("--config", help="key=value file; command-line flags override it")
    p.add_argument("--matrix", help="Matrix Market file for A")
    p.add_argument("--mass", help="Matrix Market file for M (generalized problem)")
    p.add_argument("--eig", help="EIGB1 eigenbasis file (of A, or of A - sigma M with --mass)")
    p.add_argument("--gen", help="generator m,ax,bx,gx,ay,by,gy")
    p.add_argument("--sigma", help="shift RE or RE,IM")
    p.add_argument("--delta", help="inner tolerance factor (default 0.1)")
    p.add_argument("--max-outer", dest="max_outer", help="outer iteration cap (default 50)")
    p.add_argument("--outer-tol", dest="outer_tol", help="eigenvalue residual tolerance (default 1e-10)")
    p.add_argument("--precond", help="|".join(PRECONDS))
    p.add_argument("--droptol", help="ILU drop tolerance (default 1e-2)")
    p.add_argument("--degree", help="polynomial degree (default 10)")
    p.add_argument("--poly-scheme", dest="poly_scheme", help="cheb|contour (default cheb)")
    p.add_argument("--block", help="block width u (default 1)")
    p.add_argument("--emit", help="comma list of summary,outer,inner,weights or 'all'")
    p.add_argument("--diag", help="weights basis: auto|operator|fixed|off (default auto)")
    p.add_argument("--interval", help="polynomial interval a,b (default from Ritz values)")
    p.add_argument("--inner-max-it", dest="inner_max_it", help="GMRES iteration cap (default n)")


def _flag_values(args):
    keys = _KEYS - {"out"}
    vals = {k: getattr(args, k, None) for k in keys}
    if getattr(args, "out", None) is not None:
        vals["out"] = args.out
    return vals


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which here means numerical breakdown
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def make_parser():
    parser = _Parser(prog="eigkrylov", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one experiment")
    _add_run_flags(run)
    run.add_argument("--out", help="output directory (default .)")

    cmp_ = sub.add_parser("compare", help="run several configurations on one problem")
    cmp_.add_argument("configs", nargs="*", help="key=value configuration files")
    _add_run_flags(cmp_)
    cmp_.add_argument("--out", help="output directory (default .)")

    spec = sub.add_parser("spectrum", help="print eigenvalues of a generated or supplied problem")
    spec.add_argument("--gen")
    spec.add_argument("--matrix")
    spec.add_argument("--eig")
    spec.add_argument("--near", default="0", help="print eigenvalues nearest this point")
    spec.add_argument("--count", type=int, default=10)
    return parser


# ---------------------------------------------------------------- running


def _fmt(x):
    if x is None:
        return ""
    x = float(x)
    if not np.isfinite(x):
        return "" if np.isnan(x) else ("inf" if x > 0 else "-inf")
    return "%.16e" % x


def load_problem(cfg):
    """Return ``(A, M, basis)``; ``basis`` may be ``None``."""
    try:
        if cfg.gen is not None:
            m, ax, bx, gx, ay, by, gy = cfg.gen
            try:
                A, basis = gen_convdiff(m, ax, bx, gx, ay, by, gy)
            except ValueError as exc:
                raise ConfigError(f"--gen: {exc}") from None
        else:
            A = mm_read(cfg.matrix)
            basis = None
        M = mm_read(cfg.mass) if cfg.mass is not None else None
        if cfg.eig is not None:
            lam, Z = read_eigb(cfg.eig)
            target = A if M is None else (A - cfg.sigma * M)
            try:
                basis = EigenBasis(lam, Z, A=target)
            except ValueError as exc:
                raise ConfigError(f"--eig: {exc}") from None
            if M is not None:
                basis.shift = complex(cfg.sigma)
        elif M is not None:
            basis = None
            if cfg.diag in ("auto", "fixed") and A.shape[0] <= DENSE_DIAG_LIMIT:
                basis = EigenBasis.from_dense(A - cfg.sigma * M)
                basis.shift = complex(cfg.sigma)
    except OSError as exc:
        raise ConfigError(f"cannot read input: {exc}") from None
    except MatrixMarketError as exc:
        raise ConfigError(str(exc)) from None
    if M is not None and M.shape != A.shape:
        raise ConfigError(f"mass matrix shape {M.shape} differs from A {A.shape}")
    return A, M, basis


def make_preconditioner(cfg):
    if cfg.precond == "none":
        return None
    if cfg.precond == "ilu":
        return IluPreconditioner(cfg.droptol)
    if cfg.precond == "poly":
        return PolynomialPreconditioner(cfg.degree, cfg.poly_scheme, interval=cfg.interval)
    target = {"tuned-i": "identity", "tuned-a": "A", "tuned-b": "B", "tuned-l": "lambda"}[cfg.precond]
    return TunedPreconditioner(IluPreconditioner(cfg.droptol), target)


def theta_or_d(cfg):
    if cfg.precond == "none":
        return ""
    if cfg.precond == "poly":
        return str(cfg.degree)
    return _fmt(cfg.droptol)


def execute(cfg, problem=None):
    """Run one configuration and return its OuterTrace (no files written)."""
    A, M, basis = load_problem(cfg) if problem is None else problem
    spec = ProblemSpec(
        A=A, M=M, sigma=cfg.sigma, delta=cfg.delta, max_outer=cfg.max_outer,
        outer_tol=cfg.outer_tol, precond=make_preconditioner(cfg), inner_max_it=cfg.inner_max_it,
    )
    diag_mode = "auto" if cfg.diag in ("off",) else cfg.diag
    diag = None if cfg.diag == "off" else basis
    if cfg.diag == "fixed" and diag is None:
        raise ConfigError("--diag fixed needs an eigenbasis (--gen or --eig)")
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if cfg.block == 1:
            return inverse_iteration(spec, diag, diag_mode=diag_mode if diag is not None or diag_mode == "operator" else "auto")
        return subspace_iteration(spec, cfg.block, None, diag, diag_mode=diag_mode)


def _final_weight_pair(trace):
    if not trace.steps:
        return None, None
    last = trace.steps[-1]
    if trace.block:
        return last.W1_norm, last.W2_norm
    if last.weights is None:
        return None, None
    return abs(last.weights.rhs_w1), last.weights.rhs_w2_norm


def outer_rows(trace):
    block = trace.block
    head = ["i", "lambda_re", "lambda_im", "rho_norm"]
    head += ["W1_norm", "W2_norm"] if block else ["abs_w1", "norm_w2"]
    head += ["Zw_norm", "Zwt_norm", "Zwt_over_tau", "inner_its"]
    rows = [head]
    for s in trace.steps:
        lam = complex(s.eigenvalue)
        a = b = zw = zwt = ratio = None
        if block and s.W1_norm is not None:
            a, b = s.W1_norm, s.W2_norm
            zw = s.z_norm2 * np.linalg.norm(s.block_weights)
        elif s.weights is not None:
            w = s.weights
            a, b = abs(w.rhs_w1), w.rhs_w2_norm
            zw = s.z_norm2 * np.linalg.norm(w.rhs_weights)
            zwt = s.z_norm2 * w.rhs_tilde_norm
            ratio = zwt / s.tau
        rows.append([str(s.i), _fmt(lam.real), _fmt(lam.imag), _fmt(s.rho_norm),
                     _fmt(a), _fmt(b), _fmt(zw), _fmt(zwt), _fmt(ratio), str(s.inner_iterations)])
    return rows


def inner_rows(step, block):
    hist = step.residual_history.residual_fro_norms if block else step.residual_history.residual_norms
    rows = [["k", "residual", "bound25", "bound26a"]]
    for k, r in enumerate(hist):
        full = step.bound25[k] if step.bound25 is not None and k < len(step.bound25) else None
        split = step.bound26a[k] if step.bound26a is not None and k < len(step.bound26a) else None
        rows.append([str(k), _fmt(r), _fmt(full), _fmt(split)])
    return rows


def weight_rows(trace):
    if trace.block:
        rows = [["i", "j", "l", "lambda_re", "lambda_im", "w_re", "w_im"]]
        for s in trace.steps:
            if s.block_weights is None:
                continue
            W = s.block_weights
            for l in range(W.shape[1]):
                for j in range(W.shape[0]):
                    rows.append([str(s.i), str(j + 1), str(l + 1), "", "", _fmt(W[j, l].real), _fmt(W[j, l].imag)])
        return rows
    rows = [["i", "j", "lambda_re", "lambda_im", "w_re", "w_im"]]
    for s in trace.steps:
        if s.weights is None:
            continue
        lam, w = s.weights.eigenvalues, s.weights.rhs_weights
        for j in range(w.size):
            rows.append([str(s.i), str(j + 1), _fmt(lam[j].real), _fmt(lam[j].imag),
                         _fmt(w[j].real), _fmt(w[j].imag)])
    return rows


def summary_rows(cfg, trace):
    a, b = _final_weight_pair(trace)
    return [
        ["precond", "theta_or_d", "final_abs_w1", "final_norm_w2", "outer_total", "inner_total"],
        [cfg.precond, theta_or_d(cfg), _fmt(a), _fmt(b), str(trace.n_outer), str(trace.inner_total)],
    ]


def _write_csv(path, rows):
    with open(path, "w", encoding="ascii", newline="") as fh:
        for row in rows:
            fh.write(",".join(row) + "\n")


class _Staging:
    """Write outputs into a scratch directory and move them into place only on success."""

    def __init__(self, out):
        self.out = out
        self.created_out = not os.path.isdir(out)
        os.makedirs(out, exist_ok=True)
        self.tmp = tempfile.mkdtemp(prefix=".eigkrylov-", dir=out)

    def path(self, name):
        return os.path.join(self.tmp, name)

    def commit(self):
        for name in sorted(os.listdir(self.tmp)):
            os.replace(os.path.join(self.tmp, name), os.path.join(self.out, name))
        os.rmdir(self.tmp)

    def abort(self):
        shutil.rmtree(self.tmp, ignore_errors=True)
        if self.created_out:
            try:
                os.rmdir(self.out)
            except OSError:
                pass


def emit_run(cfg, trace, stage):
    if "outer" in cfg.emit:
        _write_csv(stage.path("outer.csv"), outer_rows(trace))
    if "inner" in cfg.emit:
        for s in trace.steps:
            _write_csv(stage.path(f"inner_{s.i}.csv"), inner_rows(s, trace.block))
    if "summary" in cfg.emit:
        _write_csv(stage.path("summary.csv"), summary_rows(cfg, trace))
    if "weights" in cfg.emit:
        _write_csv(stage.path("weights.csv"), weight_rows(trace))


def cmd_run(args):
    file_vals = read_config_file(args.config) if args.config else {}
    cfg = build_config(file_vals, _flag_values(args))
    trace = execute(cfg)
    stage = _Staging(cfg.out)
    try:
        emit_run(cfg, trace, stage)
        stage.commit()
    except BaseException:
        stage.abort()
        raise
    status = "converged" if trace.converged else "not converged"
    print(
        f"{status}: lambda = {complex(trace.eigenvalue):.12g}, residual = {trace.rho_norm:.3e}, "
        f"outer = {trace.n_outer}, inner = {trace.inner_total}"
    )
    return EXIT_OK if trace.converged else EXIT_NOCONV


def comparison_rows(cfgs, traces):
    rows = [["precond", "theta_or_d", "final_abs_w1", "final_norm_w2", "outer_total", "inner_total",
             "cumulative_inner"]]
    for cfg, tr in zip(cfgs, traces):
        a, b = _final_weight_pair(tr)
        cum = np.cumsum(tr.inner_counts).tolist()
        rows.append([cfg.precond, theta_or_d(cfg), _fmt(a), _fmt(b), str(tr.n_outer), str(tr.inner_total),
                     ";".join(str(c) for c in cum)])
    return rows


def cmd_compare(args):
    if len(args.configs) < 2:
        raise ConfigError("compare needs at least two configuration files")
    base = read_config_file(args.config) if args.config else {}
    flags = _flag_values(args)
    cfgs = []
    for path in args.configs:
        vals = dict(base)
        vals.update(read_config_file(path))
        cfgs.append(build_config(vals, flags))
    keys = {c.problem_key() for c in cfgs}
    if len(keys) != 1:
        raise ConfigError("all compared configurations must share the same problem source")
    out = flags.get("out") or cfgs[0].out
    problem = load_problem(cfgs[0])
    traces = [execute(c, problem if c.sigma == cfgs[0].sigma else None) for c in cfgs]
    stage = _Staging(out)
    try:
        _write_csv(stage.path("comparison.csv"), comparison_rows(cfgs, traces))
        stage.commit()
    except BaseException:
        stage.abort()
        raise
    for cfg, tr in zip(cfgs, traces):
        print(f"{cfg.precond:8s} {theta_or_d(cfg):>24s} outer={tr.n_outer:3d} inner={tr.inner_total:5d}")
    return EXIT_OK if all(t.converged for t in traces) else EXIT_NOCONV


def cmd_spectrum(args):
    if (args.gen is None) == (args.matrix is None):
        raise ConfigError("spectrum needs exactly one of --gen or --matrix")
    near = _parse_sigma(args.near)
    if args.gen is not None:
        m, ax, bx, gx, ay, by, gy = _parse_gen(args.gen)
        try:
            _, basis = gen_convdiff(m, ax, bx, gx, ay, by, gy, validate=False)
        except ValueError as exc:
            raise ConfigError(f"--gen: {exc}") from None
        lam = basis.eigenvalues
    else:
        if args.eig is None:
            raise ConfigError("spectrum of a matrix file needs its --eig sidecar")
        try:
            lam, _ = read_eigb(args.eig)
        except (OSError, MatrixMarketError) as exc:
            raise ConfigError(str(exc)) from None
    order = np.argsort(np.abs(lam - near), kind="stable")[: args.count]
    print("rank,lambda_re,lambda_im")
    for r, j in enumerate(order, start=1):
        print(f"{r},{_fmt(lam[j].real)},{_fmt(lam[j].imag)}")
    if order.size >= 2:
        l1, l2 = lam[order[0]], lam[order[1]]
        print(f"# shift at 0.1*gap from the nearest eigenvalue: {_fmt((l1 - 0.1 * (l2 - l1)).real)}")
    return EXIT_OK


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    handlers = {"run": cmd_run, "compare": cmd_compare, "spectrum": cmd_spectrum}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"eigkrylov: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"eigkrylov: numerical breakdown: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BREAKDOWN


if __name__ == "__main__":
    sys.exit(main())
