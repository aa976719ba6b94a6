"""Command line driver: bound sweeps, operator probes and convergence studies.

Every subcommand writes CSV tables, two-column plot data, a gnuplot stub and
summary.txt with one PASS/FAIL line per acceptance check into --out.
Exit codes: 0 success, 1 an acceptance check failed, 2 configuration error,
3 numerical failure.
"""

import argparse
import csv
import math
import os
import sys
import time
from dataclasses import dataclass

SUBCOMMANDS = ("symbol-check", "dtn-probe", "split-probe", "interp-check",
               "solve", "study-h", "study-p", "study-k")
STUDY_COLUMNS = ("subcommand", "k", "h", "p", "lambda", "L_max", "dofs", "err_curl_k",
                 "proxy_err", "ratio", "delta_k", "resolved_flag", "seconds", "c1", "c2")
BOUNDS_COLUMNS = ("check_id", "k", "n", "lhs", "rhs", "pass")
THREADS_ENV = "MAXWELL_DTN_THREADS"
MAX_TETS = 50000


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- configuration

def _floats(s):
    return tuple(float(v) for v in str(s).split(",") if v.strip())


def _ints(s):
    return tuple(int(v) for v in str(s).split(",") if v.strip())


def _bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("not a boolean: %r" % s)


@dataclass
class StudyConfig:
    subcommand: str
    k: tuple = (2.0,)
    p: tuple = (1,)
    refine: tuple = (1, 2, 3)
    lam: float = 2.0
    lmax: str = "auto"          # "auto" = ceil(lam k) + 2, an integer, or "+n" over auto
    c1: float = 0.5
    c2: float = 1.0
    out: str = "results"
    threads: int = 0
    seed: int = 0
    manufactured: str = "mode:1,0,TE"
    nmax: int = 2000
    lambda0: float = 1.5
    nr: int = 24
    max_dofs: int = 60000
    delta: bool = True
    proxy: bool = True
    timings: bool = False

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError("unknown subcommand %r" % self.subcommand)
        if not self.k or any(not (k >= 1) for k in self.k):
            raise ConfigError("all k must be >= 1")
        if not (self.lam > 1):
            raise ConfigError("lambda must be > 1")
        if not (self.lambda0 > 1):
            raise ConfigError("lambda0 must be > 1")
        if any(p < 0 for p in self.p) or any(n < 1 for n in self.refine):
            raise ConfigError("p >= 0 and refinement >= 1 required")
        if not (self.c1 > 0) or self.c2 < 0:
            raise ConfigError("c1 > 0 and c2 >= 0 required")
        if self.threads < 0:
            raise ConfigError("thread count must be >= 0")
        if self.nmax < 0 or self.nr < 2 or self.max_dofs < 1:
            raise ConfigError("nmax >= 0, nr >= 2 and max_dofs >= 1 required")
        self.L_for(self.k[0])
        parse_problem(self.manufactured)

    def L_for(self, k):
        auto = int(math.ceil(self.lam * k)) + 2
        rule = str(self.lmax).strip()
        try:
            if rule == "auto":
                return auto
            if rule.startswith("+"):
                return auto + int(rule[1:])
            L = int(rule)
        except ValueError:
            raise ConfigError("bad L_max rule %r" % rule) from None
        if L < 1:
            raise ConfigError("L_max must be >= 1")
        return L


_CONVERT = {"k": _floats, "p": _ints, "refine": _ints, "lam": float, "lmax": str,
            "c1": float, "c2": float, "out": str, "threads": int, "seed": int,
            "manufactured": str, "nmax": int, "lambda0": float, "nr": int,
            "max_dofs": int, "delta": _bool, "proxy": _bool, "timings": _bool}
_ALIASES = {"lambda": "lam", "l_max": "lmax", "refinement": "refine", "refinements": "refine"}


def read_config_file(path):
    """key = value lines; '#' starts a comment."""
    out = {}
    try:
        lines = open(path).read().splitlines()
    except OSError as exc:
        raise ConfigError("cannot read config file: %s" % exc) from None
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("%s:%d: expected key = value" % (path, num))
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_").lower()
        key = _ALIASES.get(key, key)
        if key not in _CONVERT and key != "subcommand":
            raise ConfigError("%s:%d: unknown key %r" % (path, num, key))
        out[key] = value
    return out


def build_config(subcommand, file_values, flag_values):
    """Defaults < config file < flags."""
    merged = dict(file_values)
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    sub = merged.pop("subcommand", subcommand) if subcommand is None else subcommand
    merged.pop("subcommand", None)
    kwargs = {}
    for key, value in merged.items():
        try:
            kwargs[key] = _CONVERT[key](value)
        except (TypeError, ValueError) as exc:
            raise ConfigError("bad value for %s: %s" % (key, exc)) from None
    return StudyConfig(subcommand=sub, **kwargs)


def parse_problem(spec):
    """'mode:ell,m,TE|TM' or 'source:ell,m,a,b' -> (kind, args)."""
    try:
        kind, args = spec.split(":", 1)
        parts = [s.strip() for s in args.split(",")]
        if kind == "mode":
            ell, m, pol = int(parts[0]), int(parts[1]), parts[2].upper()
            if ell < 1 or abs(m) > ell or pol not in ("TE", "TM") or len(parts) != 3:
                raise ValueError
            return kind, (ell, m, pol)
        if kind == "source":
            ell, m, a, b = int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])
            if ell < 1 or abs(m) > ell or not (0 < a < b < 1) or len(parts) != 4:
                raise ValueError
            return kind, (ell, m, a, b)
    except (ValueError, IndexError):
        pass
    raise ConfigError("bad problem %r; use mode:ell,m,TE|TM or source:ell,m,a,b" % spec)


def apply_threads(threads):
    """Thread count for the BLAS/OpenMP pools; 0 keeps the library default (all cores).
    Effective only before numpy is first imported."""
    if threads > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(threads)


def threads_from_env():
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError("%s must be an integer" % THREADS_ENV) from None
    if n < 0:
        raise ConfigError("%s must be >= 0" % THREADS_ENV)
    return n


# ---------------------------------------------------------------- output

def fmt(v):
    if type(v).__name__ in ("bool", "bool_"):
        return "1" if v else "0"
    if type(v).__name__.startswith("int"):
        return str(int(v))
    if isinstance(v, float):
        return "nan" if math.isnan(v) else "%.10g" % v
    return str(v)


class Output:
    """Collects tables, plot series and checks; writes them deterministically."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.tables = {}
        self.series = {}
        self.checks = []
        self.notes = []

    def table(self, name, columns):
        return self.tables.setdefault(name, (tuple(columns), []))[1]

    def study_row(self, res):
        cfg = self.cfg
        self.table("study.csv", STUDY_COLUMNS).append(
            (cfg.subcommand, res.k, res.h, res.p, cfg.lam, res.L_max, res.dofs, res.err_curl_k,
             res.proxy_err, res.ratio, res.delta_k, res.resolved,
             res.seconds if cfg.timings else "NA", cfg.c1, cfg.c2))

    def add_series(self, name, x, y):
        self.series[name] = (list(x), list(y))

    def check(self, name, passed, detail):
        self.checks.append((name, bool(passed), detail))

    def write(self):
        os.makedirs(self.cfg.out, exist_ok=True)
        for name, (cols, rows) in self.tables.items():
            with open(os.path.join(self.cfg.out, name), "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(cols)
                for row in rows:
                    w.writerow([fmt(v) for v in row])
        plot = ["set logscale xy", "set key left top"]
        for name, (x, y) in self.series.items():
            path = os.path.join(self.cfg.out, name + ".dat")
            with open(path, "w") as fh:
                fh.write("# %s\n" % name)
                for a, b in zip(x, y):
                    fh.write("%s %s\n" % (fmt(float(a)), fmt(float(b))))
            plot.append("plot '%s.dat' using 1:2 with linespoints title '%s'" % (name, name))
        if self.series:
            with open(os.path.join(self.cfg.out, "plot.gp"), "w") as fh:
                fh.write("# gnuplot -p plot.gp\n" + "\n".join(plot) + "\n")
        lines = ["subcommand: %s" % self.cfg.subcommand]
        lines += ["%s %s: %s" % ("PASS" if ok else "FAIL", name, detail) for name, ok, detail in self.checks]
        lines += ["note: %s" % n for n in self.notes]
        with open(os.path.join(self.cfg.out, "summary.txt"), "w") as fh:
            fh.write("\n".join(lines) + "\n")
        return "\n".join(lines)

    @property
    def passed(self):
        return all(ok for _, ok, _ in self.checks)


# ---------------------------------------------------------------- subcommands

def cmd_symbol_check(cfg, out):
    from .specfun import check_symbol_bounds
    rep = check_symbol_bounds(cfg.k, cfg.nmax, cfg.lambda0)
    rows = out.table("bounds.csv", BOUNDS_COLUMNS)
    for r in rep.rows:
        rows.append((r.check_id, r.k, r.n, r.lhs, r.rhs, r.passed))
    out.check("symbol bounds", rep.violations == 0, "%d violations over n <= %d" % (rep.violations, cfg.nmax))
    out.check("C0 spread", rep.c0_spread <= 0.5, "sup (n+1)/|z_n+1| varies by %.3g (<= 0.5)" % rep.c0_spread)
    ks = sorted(rep.c0)
    out.add_series("c0_vs_k", ks, [rep.c0[k] for k in ks])


def cmd_dtn_probe(cfg, out):
    from .dtn import bhigh_limit, dtn_probe
    rows = dtn_probe(list(cfg.k), cfg.lam)
    tab = out.table("dtn_probe.csv", ("k", "lambda", "ell_max", "quantity", "value",
                                      "fitted_constant", "fitted_exponent", "bound_power"))
    for r in rows:
        tab.append((r["k"], cfg.lam, r["ell_max"], r["quantity"], r["value"], r["fitted_constant"],
                    r["fitted_exponent"], r["bound_power"]))
    for q in sorted({r["quantity"] for r in rows}):
        sel = [r for r in rows if r["quantity"] == q]
        out.add_series("dtn_" + q, [r["k"] for r in sel], [r["value"] for r in sel])
    # the high-mode constant saturates at a k-independent limit from below
    bh = [r["value"] for r in rows if r["quantity"] == "bhigh_grad"]
    lim = bhigh_limit(cfg.lam)
    out.check("bhigh constant bounded in k", max(bh) <= lim * (1 + 1e-9),
              "max fitted C %.4g <= limit %.4g" % (max(bh), lim))
    norms = [r for r in rows if r["quantity"] == "dtn_norm"]
    if len(norms) > 1:
        e, power = norms[0]["fitted_exponent"], norms[0]["bound_power"]
        out.check("capacity norm growth", e <= power, "fitted k-exponent %.3f (<= %.1f)" % (e, power))


def cmd_split_probe(cfg, out):
    from .freqsplit import stable_split_constant
    tab = out.table("split.csv", ("k", "lambda", "L_max", "N_r", "constant"))
    vals = []
    for k in cfg.k:
        L = cfg.L_for(k)
        c = stable_split_constant(k, L, cfg.nr, cfg.lam)
        vals.append(c)
        tab.append((k, cfg.lam, L, cfg.nr, c))
    out.add_series("split_constant", cfg.k, vals)
    spread = max(vals) / min(vals)
    out.check("stable splitting flat in k", spread <= 2.0, "max/min = %.3f (<= 2)" % spread)


def cmd_interp_check(cfg, out):
    import numpy as np
    from .femcore.mesh import build_ball_mesh
    from .femcore.sequence import exact_sequence_check
    from .interp import RandomTrigField, commuting_defects, global_interpolate, interpolation_error
    from .potentials import InteriorMode

    seq = out.table("sequence.csv", ("p", "grad_inclusion", "curl_inclusion", "div_inclusion",
                                     "div_curl", "curl_grad", "rank_grad", "rank_curl", "ranks_ok"))
    com = out.table("commuting.csv", ("p", "seed", "grad", "curl", "div"))
    worst_seq, ranks, worst_com = 0.0, True, 0.0
    for p in cfg.p:
        r = exact_sequence_check(p, seed=cfg.seed)
        seq.append((p, r.grad_inclusion, r.curl_inclusion, r.div_inclusion, r.div_curl, r.curl_grad,
                    r.rank_grad, r.rank_curl, r.ranks_ok))
        worst_seq = max(worst_seq, r.grad_inclusion, r.curl_inclusion, r.div_inclusion, r.div_curl, r.curl_grad)
        ranks &= r.ranks_ok
        for s in range(20):
            d = commuting_defects(p, RandomTrigField(cfg.seed + s))
            com.append((p, cfg.seed + s, d["grad"], d["curl"], d["div"]))
            worst_com = max(worst_com, *d.values())
    out.check("exact sequence inclusions", worst_seq <= 1e-10, "worst residual %.3g" % worst_seq)
    out.check("rank identities", ranks, "dim range = dim kernel of the next map")
    out.check("commuting diagram", worst_com <= 1e-10, "worst defect %.3g over 20 fields per p" % worst_com)

    k = cfg.k[0]
    exact = InteriorMode(1, 0, k, "TE")
    tab = out.table("interp.csv", ("k", "p", "refine", "h", "l2_err", "curl_err", "mismatch"))
    for p in cfg.p:
        hs, errs = [], []
        for n in cfg.refine:
            mesh = build_ball_mesh(n)
            space, c, mism = global_interpolate(mesh, p, lambda x: exact(x)[0], return_mismatch=True)
            e, ce = interpolation_error(space, c, lambda x: exact(x)[0], lambda x: exact(x)[1])
            tab.append((k, p, n, mesh.h(), e, ce, mism))
            hs.append(mesh.h())
            errs.append(float(np.hypot(ce, k * e)))
        out.add_series("interp_p%d" % p, hs, errs)


def problem_for(cfg, k):
    from .potentials import InteriorMode, SourceSpec, VolumeSourceField
    kind, args = parse_problem(cfg.manufactured)
    if kind == "mode":
        return InteriorMode(args[0], args[1], k, args[2])
    ell, m, a, b = args
    return VolumeSourceField(k, SourceSpec(ell=ell, m=m, a=a, b=b))


def _run(cfg, out, k, p, n):
    from .solver import run_case
    res, system, x = run_case(k, p, n, problem_for(cfg, k), cfg.L_for(k), cfg.lam, cfg.c1, cfg.c2,
                              with_proxy=cfg.proxy, with_delta=cfg.delta)
    out.study_row(res)
    return res


def _orth_check(out, results):
    worst = max(r.extra["orthogonality"] for r in results)
    out.check("galerkin orthogonality", worst <= 1e-8, "worst residual %.3g (relative to scale)" % worst)


def cmd_solve(cfg, out):
    res = [_run(cfg, out, k, p, n) for k in cfg.k for p in cfg.p for n in cfg.refine]
    _orth_check(out, res)


def cmd_study_h(cfg, out):
    from .solver import fit_slope
    allres = []
    for k in cfg.k:
        for p in cfg.p:
            res = [_run(cfg, out, k, p, n) for n in cfg.refine]
            allres += res
            hs, errs = [r.h for r in res], [r.err_curl_k for r in res]
            out.add_series("err_vs_h_k%g_p%d" % (k, p), hs, errs)
            if len(res) >= 2:
                s = fit_slope(hs, errs)
                out.check("h-slope k=%g p=%d" % (k, p), s >= p + 0.8, "slope %.3f (>= %.1f)" % (s, p + 0.8))
    _orth_check(out, allres)


def cmd_study_p(cfg, out):
    allres = []
    for k in cfg.k:
        for n in cfg.refine:
            res = [_run(cfg, out, k, p, n) for p in sorted(cfg.p)]
            allres += res
            errs = [r.err_curl_k for r in res]
            out.add_series("err_vs_p_k%g_n%d" % (k, n), [r.p for r in res], errs)
            dec = all(b < a for a, b in zip(errs, errs[1:]))
            out.check("p-monotone k=%g n=%d" % (k, n), dec, "errors %s" % ", ".join("%.3g" % e for e in errs))
    _orth_check(out, allres)


def choose_resolution(k, c1, c2, max_dofs, max_tets=MAX_TETS, n_limit=64):
    """(p, refinement, resolved, reason): p = ceil(c2 ln k) and the coarsest mesh
    with kh/max(p, 1) <= c1 within the dof and element caps; otherwise the finest
    mesh inside the caps, flagged unresolved."""
    from .femcore.mesh import build_ball_mesh
    from .femcore.spaces import FeSpace
    p = max(int(math.ceil(c2 * math.log(k) - 1e-12)), 0)
    best = None
    for n in range(1, n_limit + 1):
        if 32 * n ** 3 > max_tets:
            return p, best, False, "element cap %d reached" % max_tets
        mesh = build_ball_mesh(n)
        if FeSpace(mesh, "N", p).ndof > max_dofs:
            return p, best, False, "dof cap %d reached" % max_dofs
        best = n
        if k * mesh.h() / max(p, 1) <= c1:
            return p, n, True, ""
    return p, best, False, "refinement limit reached"


def cmd_study_k(cfg, out):
    res = []
    for k in cfg.k:
        p, n, ok, why = choose_resolution(k, cfg.c1, cfg.c2, cfg.max_dofs)
        if n is None:
            out.notes.append("k=%g p=%d: no mesh inside the caps (%s)" % (k, p, why))
            continue
        if not ok:
            out.notes.append("k=%g p=%d: kh/p <= c1 needs a finer mesh than refinement %d (%s); "
                             "run kept and flagged unresolved" % (k, p, n, why))
        res.append(_run(cfg, out, k, p, n))
    out.add_series("ratio_vs_k", [r.k for r in res], [r.ratio for r in res])
    out.add_series("delta_vs_k", [r.k for r in res], [r.delta_k for r in res])
    resolved = [r for r in res if r.resolved and not r.degenerate]
    if not resolved:
        out.check("quasi-optimality", False, "no resolved runs inside the resource caps")
        return
    ratios = [r.ratio for r in resolved]
    out.check("ratio bound", max(ratios) <= 10, "max ratio %.3g (<= 10)" % max(ratios))
    lo, hi = min(resolved, key=lambda r: r.k), max(resolved, key=lambda r: r.k)
    out.check("no growth in k", hi.ratio <= 2 * lo.ratio, "ratio(k=%g) / ratio(k=%g) = %.3g (<= 2)"
              % (hi.k, lo.k, hi.ratio / lo.ratio))
    if cfg.delta:
        worst = max(r.delta_k for r in resolved)
        out.check("delta probe", worst < 1, "max delta_k %.3g (< 1)" % worst)


COMMANDS = {"symbol-check": cmd_symbol_check, "dtn-probe": cmd_dtn_probe, "split-probe": cmd_split_probe,
            "interp-check": cmd_interp_check, "solve": cmd_solve, "study-h": cmd_study_h,
            "study-p": cmd_study_p, "study-k": cmd_study_k}


# ---------------------------------------------------------------- entry point

def make_parser():
    ap = argparse.ArgumentParser(prog="maxwell-dtn", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value file; flags override it")
        sp.add_argument("--k", help="comma separated wavenumbers")
        sp.add_argument("--p", help="comma separated polynomial degrees")
        sp.add_argument("--refine", help="comma separated refinement levels")
        sp.add_argument("--lambda", dest="lam", help="frequency splitting parameter (> 1)")
        sp.add_argument("--lmax", help="'auto', an integer, or '+n' above auto")
        sp.add_argument("--c1", help="scale resolution constant for kh/p")
        sp.add_argument("--c2", help="scale resolution constant for p / log k")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed")
        sp.add_argument("--manufactured", help="mode:ell,m,TE|TM or source:ell,m,a,b")
        sp.add_argument("--nmax", help="largest index of the symbol sweep")
        sp.add_argument("--lambda0", help="bound parameter of the symbol sweep")
        sp.add_argument("--nr", help="radial degree of the splitting probe")
        sp.add_argument("--max-dofs", dest="max_dofs")
        sp.add_argument("--no-delta", dest="delta", action="store_const", const="0")
        sp.add_argument("--no-proxy", dest="proxy", action="store_const", const="0")
        sp.add_argument("--timings", action="store_const", const="1",
                        help="record wall times (CSV is no longer reproducible byte for byte)")
    return ap


def main(argv=None):
    args = make_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("config", "subcommand")}
    try:
        threads = threads_from_env()
        file_values = read_config_file(args.config) if args.config else {}
        file_values.pop("subcommand", None)
        cfg = build_config(args.subcommand, file_values, flags)
        cfg.threads = threads
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    apply_threads(cfg.threads)
    out = Output(cfg)
    t0 = time.perf_counter()
    try:
        import numpy as np
        COMMANDS[cfg.subcommand](cfg, out)
    except (FloatingPointError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print("numerical failure: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return 3
    if cfg.timings:
        out.notes.append("wall time %.1f s" % (time.perf_counter() - t0))
    print(out.write())
    return 0 if out.passed else 1


if __name__ == "__main__":
    sys.exit(main())
