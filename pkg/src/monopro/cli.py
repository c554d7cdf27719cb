"""Command-line experiment harness.

``monopro clt|transforms|mfs-check|cfree|fock-moments|theorems [--config FILE] [flags] [--out DIR]``

Every subcommand writes one versioned CSV table (to ``DIR/<command>.csv`` with
``--out``, else to stdout) and, with ``--out``, a JSON summary.  Values in a
``--config`` JSON file are overridden by flags given on the command line.

Exit codes: 0 all checks pass, 1 a checked identity fails, 2 bad configuration.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from . import cfree, core, mfs, ncpart, transforms
from .errors import MonoproError
from .moments import MomentSpec

SCHEMA_VERSION = 1
TOL = 1e-9
PSD_TOL = 1e-8

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    """Invalid configuration (exit code 2)."""


# -- configuration -------------------------------------------------------------------------

DEFAULTS: dict[str, dict[str, Any]] = {
    "clt": {"m": 4, "N_list": "2,4,8,16", "d": 1, "eta": None, "b": "identity", "seed": 0},
    "transforms": {"d": 2, "trials": 5, "M": 5, "N": 4, "L": 8, "seed": 0},
    "mfs-check": {"d_list": "1,2", "order": 5, "trials": 100, "seed": 0},
    "cfree": {"d": 2, "spec1": None, "spec2": None, "check": "equivalence", "trials": 100,
              "maxlen": 6, "seed": 0},
    "fock-moments": {"module": None, "d": 2, "K": 2, "L": 6, "mode": "weakly_monotone",
                     "word": None, "seed": 0},
    "theorems": {"d": 2, "K": 3, "L": 6, "M": 4, "N": 3, "L_transforms": 8, "trials": 50,
                 "seed": 0, "only": None, "eta": None},
}


def _load_config(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}:1:1: config must be a JSON object")
    return {k.replace("-", "_"): v for k, v in obj.items()}


def resolve(command: str, args: argparse.Namespace) -> dict[str, Any]:
    """Defaults, then config file values, then explicitly given flags."""
    cfg = dict(DEFAULTS[command])
    from_file = _load_config(args.config)
    unknown = sorted(set(from_file) - set(cfg))
    if unknown:
        raise ConfigError(f"{args.config}: unknown key(s) for '{command}': {', '.join(unknown)}")
    cfg.update(from_file)
    for key in DEFAULTS[command]:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _int_list(text: str | Sequence[int], name: str) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"--{name.replace('_', '-')}: expected comma-separated integers, got {text!r}") from exc


def _read_json(path: str, what: str) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read {what} ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON in {what}: {exc.msg}") from exc


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("MONOPRO_THREADS", "1") or 1))
    except ValueError as exc:
        raise ConfigError("MONOPRO_THREADS must be an integer") from exc


def _pmap(fn: Callable, items: Iterable) -> list:
    """Ordered parallel map capped by ``MONOPRO_THREADS``."""
    items = list(items)
    n = _threads()
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(n) as pool:
        return list(pool.map(fn, items))


# -- output ------------------------------------------------------------------------------------

class Table:
    """CSV table with a versioned comment header."""

    def __init__(self, name: str, columns: Sequence[str]):
        self.name, self.columns, self.rows = name, list(columns), []

    def add(self, *row: Any) -> None:
        self.rows.append([_fmt(x) for x in row])

    def render(self) -> str:
        buf = io.StringIO()
        buf.write(f"# monopro {self.name} v{SCHEMA_VERSION}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        w.writerows(self.rows)
        return buf.getvalue()


def _fmt(x: Any) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12e}"
    return str(x)


def _mat_cells(a: np.ndarray) -> list[float]:
    return [float(v) for v in a.real.ravel()] + [float(v) for v in a.imag.ravel()]


def _mat_columns(d: int, prefix: str = "") -> list[str]:
    return [f"{prefix}re_{i}{j}" for i in range(d) for j in range(d)] + \
           [f"{prefix}im_{i}{j}" for i in range(d) for j in range(d)]


def _emit(command: str, out: str | None, table: Table, summary: dict) -> None:
    text = table.render()
    if out is None:
        sys.stdout.write(text)
        return
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / f"{command}.csv").write_text(text)
    (outdir / f"{command}.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


# -- clt -----------------------------------------------------------------------------------------

CLT_SCALAR = {2: 1.0, 4: 1.5, 6: 2.5, 8: 35 / 8}


def _load_eta(path: str | None, d: int) -> core.CPMap:
    if path is None:
        return core.identity_map(d)
    eta = core.cp_from_json(_read_json(path, "CP map"))
    if eta.d != d:
        raise ConfigError(f"{path}: CP map acts on M_{eta.d} but d = {d}")
    return eta


def run_clt(cfg: dict) -> tuple[Table, dict, bool]:
    m, d = int(cfg["m"]), int(cfg["d"])
    ns = _int_list(cfg["N_list"], "N_list")
    if not ns or min(ns) < 1:
        raise ConfigError("--N-list: needs positive integers")
    eta = _load_eta(cfg["eta"], d)
    if cfg["b"] in (None, "identity"):
        b = [core.identity(d)] * (m - 1)
        identity_b = True
    else:
        b = [core.mat_from_json(x) for x in _read_json(cfg["b"], "coefficients")]
        identity_b = False
        if len(b) != m - 1 or any(x.shape != (d, d) for x in b):
            raise ConfigError(f"{cfg['b']}: need {m - 1} matrices of size {d}x{d}")
    limit = ncpart.clt_limit_moment(m, b, eta)
    table = Table("clt", ["N"] + _mat_columns(d) + ["residual"])
    residuals = []
    for n, val in zip(ns, _pmap(lambda n: ncpart.finite_n_moment(m, n, b, eta), ns)):
        r = float(np.max(np.abs(val - limit)))
        residuals.append((n, r))
        table.add(n, *_mat_cells(val), r)
    table.add("inf", *_mat_cells(limit), 0.0)
    tail = [r for n, r in sorted(residuals) if n >= 4]
    monotone = all(b_ <= a_ + 1e-12 and (b_ < a_ or a_ <= 1e-12) for a_, b_ in zip(tail, tail[1:]))
    scalar_ok = True
    scalar_case = d == 1 and identity_b and np.allclose(eta(core.identity(1)), 1.0) and m in CLT_SCALAR
    if scalar_case:
        scalar_ok = abs(limit[0, 0] - CLT_SCALAR[m]) <= TOL
    summary = {"m": m, "limit": _mat_cells(limit), "residual_monotone": monotone,
               "scalar_check": scalar_ok if scalar_case else None}
    return table, summary, monotone and scalar_ok


# -- transforms ------------------------------------------------------------------------------------

# theorem tag -> (identity that holds, alternative composition order)
TRANSFORM_PAIRS = {
    "h-composition": ("h_{X+Y} = h_X o h_Y", None),
    "H-composition": ("H_{X+Y} = H_X o H_Y", None),
    "kappa-composition": ("kappa_{VU} = kappa_U o kappa_V", "kappa_{VU} = kappa_V o kappa_U"),
    "rho-composition": ("rho_{UV} = rho_U o rho_V", "rho_{UV} = rho_V o rho_U"),
    "K-composition": ("K_{VU} = K_U o K_V", "K_{VU} = K_V o K_U"),
    "r-composition": ("r_{UV} = r_U o r_V", "r_{UV} = r_V o r_U"),
}


def _transform_trial(d: int, seed: int, L: int, M: int, N: int) -> dict[str, float]:
    inst = transforms.random_instance(d, seed, L=L)
    z0 = core.random_matrix(d, np.random.default_rng([seed, 1]), 0.5)
    return {r.name: r.residual for r in transforms.transform_suite(inst, z0, M, N)}


def _transform_rows(table: Table, trial: int, res: dict[str, float], M: int, N: int,
                    only: set[str] | None) -> list[str]:
    failures = []
    for tag, (holds, alt) in TRANSFORM_PAIRS.items():
        if only and tag not in only:
            continue
        order = N if tag[0] in "HKr" else M
        table.add(tag, trial, order, holds, "theorem", res[holds])
        if res[holds] > TOL:
            failures.append(tag)
        if alt is not None:
            table.add(tag, trial, order, alt, "alternative", res[alt])
            if res[alt] <= TOL:  # exactly one order may pass
                failures.append(f"{tag} (both orders pass)")
    return failures


def run_transforms(cfg: dict) -> tuple[Table, dict, bool]:
    d, trials, M, N, L, seed = (int(cfg[k]) for k in ("d", "trials", "M", "N", "L", "seed"))
    table = Table("transforms", ["theorem", "trial", "order", "identity", "role", "residual"])
    results = _pmap(lambda t: _transform_trial(d, seed * 100_003 + t, L, M, N), range(trials))
    failures: list[str] = []
    for t, res in enumerate(results):
        failures += _transform_rows(table, t, res, M, N, None)
    return table, {"failures": sorted(set(failures))}, not failures


# -- mfs-check ---------------------------------------------------------------------------------------

def run_mfs_check(cfg: dict) -> tuple[Table, dict, bool]:
    order, trials, seed = int(cfg["order"]), int(cfg["trials"]), int(cfg["seed"])
    ds = _int_list(cfg["d_list"], "d_list")
    table = Table("mfs-check", ["law", "d", "order", "trials", "residual"])
    failures = []
    for d, worst in zip(ds, _pmap(lambda d: mfs.law_suite(d, order, trials, seed), ds)):
        for law, r in worst.items():
            table.add(law, d, order, trials, r)
            if r > mfs.ATOL:
                failures.append(f"{law} (d={d})")
    return table, {"failures": failures}, not failures


# -- cfree ---------------------------------------------------------------------------------------------

def _fock_spec(path: str, d: int) -> MomentSpec:
    from .fock import FockElement, FockSpace, gauss, zeta

    space = FockSpace.from_json(_read_json(path, "module spec"))
    if space.d != d:
        raise ConfigError(f"{path}: module over M_{space.d} but d = {d}")
    return FockElement(space, gauss(zeta(1, d))).moments(space.L)


def _load_spec(value: str | None, d: int, rng: np.random.Generator, order: int) -> MomentSpec:
    if value is None:
        return cfree.positive_fock_spec(d, rng, max_order=order)
    if value.startswith("fock:"):
        return _fock_spec(value[len("fock:"):], d)
    spec = MomentSpec.from_json(_read_json(value, "moment spec"))
    if spec.d != d:
        raise ConfigError(f"{value}: spec over M_{spec.d} but d = {d}")
    return spec


CFREE_CHECKS = ("equivalence", "positivity", "independence")


def run_cfree(cfg: dict) -> tuple[Table, dict, bool]:
    d, trials, seed, maxlen = (int(cfg[k]) for k in ("d", "trials", "seed", "maxlen"))
    check = cfg["check"]
    if check not in CFREE_CHECKS:
        raise ConfigError(f"--check: expected one of {', '.join(CFREE_CHECKS)}, got {check!r}")
    rng = np.random.default_rng(seed)
    order = max(maxlen, 6)
    phi1 = _load_spec(cfg["spec1"], d, rng, order)
    phi2 = _load_spec(cfg["spec2"], d, rng, order)
    cfree.check_input_positive(phi1, phi2)
    table = Table("cfree", ["check", "trial", "residual"])
    worst = 0.0
    tol = TOL
    if check == "equivalence":
        if maxlen > min(phi1.max_order, phi2.max_order):
            raise ConfigError(f"--maxlen {maxlen} exceeds the specs' orders")
        for t in range(trials):
            w = cfree.random_word(d, np.random.default_rng([seed, t]), maxlen)
            r = float(np.max(np.abs(cfree.monotone_eval(w, phi1, phi2) - cfree.monotone_as_cfree(w, phi1, phi2))))
            table.add("equivalence", t, r)
            worst = max(worst, r)
    elif check == "positivity":
        tol = PSD_TOL
        half = min(phi1.max_order, phi2.max_order) // 2
        psi1, psi2 = (cfree.positive_fock_spec(d, rng, max_order=2 * half) for _ in range(2))
        evaluators = {
            "monotone": lambda w: cfree.monotone_eval(w, phi1, phi2),
            "free": lambda w: cfree.free_eval(w, phi1, phi2),
            "cfree": lambda w: cfree.cfree_eval(w, phi1, phi2, psi1, psi2),
        }
        for t in range(trials):
            trng = np.random.default_rng([seed, t])
            words = [cfree.random_word(d, trng, half, minlen=0) for _ in range(6)]
            for name, ev in evaluators.items():
                r = max(0.0, -cfree.gram_min_eigenvalue(ev, words))
                table.add(f"positivity-{name}", t, r)
                worst = max(worst, r)
    else:
        for t in range(trials):
            for cond, r in cfree.check_abstract_independence(phi1, phi2, trials=1, seed=seed * 100_003 + t).items():
                table.add(f"independence-{cond}", t, r)
                worst = max(worst, r)
    return table, {"check": check, "max_residual": worst}, worst <= tol


# -- fock-moments ---------------------------------------------------------------------------------------

def _parse_word(text: str, d: int):
    from .fock import Annihilate, Create, gauss, zeta

    ops = []
    for token in text.replace(",", " ").split():
        kind, idx = token[0].upper(), token[1:]
        if kind not in "GCA" or not idx.isdigit():
            raise ConfigError(f"--word: bad letter {token!r} (use G<i>, C<i> or A<i>)")
        f = zeta(int(idx), d)
        ops.append({"G": gauss(f), "C": Create(f), "A": Annihilate(f)}[kind])
    if not ops:
        raise ConfigError("--word: empty word")
    return ops


def run_fock_moments(cfg: dict) -> tuple[Table, dict, bool]:
    from .fock import FockSpace, moment_dump

    if cfg["module"] is not None:
        space = FockSpace.from_json(_read_json(cfg["module"], "module spec"))
    else:
        space = FockSpace.uniform(int(cfg["d"]), int(cfg["K"]), int(cfg["L"]), cfg["mode"])
    words = cfg["word"] or ["G1 G1", "G1 G2 G2 G1", "G2 G1 G1 G2"]
    if isinstance(words, str):
        words = [words]
    for text in words:
        for i in (int(tok[1:]) for tok in text.replace(",", " ").split() if tok[1:].isdigit()):
            if not 1 <= i <= space.K:
                raise ConfigError(f"--word {text!r}: index {i} outside 1..{space.K}")
    named = [(text, _parse_word(text, space.d)) for text in words]
    text = moment_dump(space, named)
    table = Table("fock-moments", [])
    lines = text.strip("\n").split("\n")
    table.columns = lines[0].split(",")
    table.rows = [line.split(",") for line in lines[1:]]
    return table, {"words": list(words)}, True


# -- theorems ---------------------------------------------------------------------------------------------

THEOREM_TAGS = ("mfs-laws",) + tuple(TRANSFORM_PAIRS) + (
    "independence-lambda", "independence-gauss", "cfree-equivalence",
    "positivity-monotone", "positivity-free", "positivity-cfree", "mixed-gram")


def run_theorems(cfg: dict) -> tuple[Table, dict, bool]:
    from .fock import FockSpace, MONOTONE, WEAKLY_MONOTONE
    from .fock.independence import check_monotone_independence, gauss_algebra, lambda_algebra

    d, K, L, M, N, Lt, trials, seed = (int(cfg[k]) for k in ("d", "K", "L", "M", "N", "L_transforms", "trials", "seed"))
    only = set(cfg["only"].split(",")) if isinstance(cfg["only"], str) else (set(cfg["only"]) if cfg["only"] else None)
    if only:
        bad = sorted(only - set(THEOREM_TAGS))
        if bad:
            raise ConfigError(f"--only: unknown theorem tag(s) {', '.join(bad)}; known: {', '.join(THEOREM_TAGS)}")

    def wanted(tag: str) -> bool:
        return only is None or tag in only

    eta = _load_eta(cfg["eta"], d) if cfg["eta"] is not None else None
    table = Table("theorems", ["theorem", "trial", "role", "residual"])
    failures: list[str] = []

    def record(tag: str, t: int, r: float, tol: float = TOL, role: str = "theorem") -> None:
        table.add(tag, t, role, r)
        if role == "theorem" and r > tol:
            failures.append(tag)

    if wanted("mfs-laws"):
        for t in range(trials):
            res = mfs.law_residuals(d, 5, np.random.default_rng([seed, t]))
            record("mfs-laws", t, max(res.values()), mfs.ATOL)

    tr_tags = [tag for tag in TRANSFORM_PAIRS if wanted(tag)]
    if tr_tags:
        results = _pmap(lambda t: _transform_trial(d, seed * 100_003 + t, Lt, M, N), range(trials))
        for t, res in enumerate(results):
            for tag in tr_tags:
                holds, alt = TRANSFORM_PAIRS[tag]
                record(tag, t, res[holds])
                if alt is not None:
                    record(tag, t, res[alt], role="alternative")
                    if res[alt] <= TOL:
                        failures.append(f"{tag} (both orders pass)")

    rng = np.random.default_rng(seed)
    etas = tuple(eta if eta is not None else core.random_cp(d, rng, scale=0.7) for _ in range(K))
    for tag, mode, make in (("independence-lambda", MONOTONE, lambda_algebra),
                            ("independence-gauss", WEAKLY_MONOTONE, gauss_algebra)):
        if not wanted(tag):
            continue
        space = FockSpace(d, K, L, mode, etas)
        algebras = [make(space, i) for i in range(1, K + 1)]
        reports = _pmap(lambda t: check_monotone_independence(space, algebras, trials=1, seed=seed * 100_003 + t),
                        range(trials))
        for t, rep in enumerate(reports):
            record(tag, t, rep.max_violation)

    c_tags = [t for t in ("cfree-equivalence", "positivity-monotone", "positivity-free",
                          "positivity-cfree", "mixed-gram") if wanted(t)]
    for t in range(trials if c_tags else 0):
        trng = np.random.default_rng([seed, 7, t])
        phi1, phi2, psi1, psi2 = (cfree.positive_fock_spec(d, trng, max_order=6) for _ in range(4))
        if wanted("cfree-equivalence"):
            w = cfree.random_word(d, trng, 6)
            record("cfree-equivalence", t, float(np.max(np.abs(
                cfree.monotone_eval(w, phi1, phi2) - cfree.monotone_as_cfree(w, phi1, phi2)))))
        words = [cfree.random_word(d, trng, 3, minlen=0) for _ in range(6)]
        evs = {"positivity-monotone": lambda w: cfree.monotone_eval(w, phi1, phi2),
               "positivity-free": lambda w: cfree.free_eval(w, phi1, phi2),
               "positivity-cfree": lambda w: cfree.cfree_eval(w, phi1, phi2, psi1, psi2)}
        for tag, ev in evs.items():
            if wanted(tag):
                record(tag, t, max(0.0, -cfree.gram_min_eigenvalue(ev, words)), PSD_TOL)
        if wanted("mixed-gram"):
            a = [cfree.random_word(d, trng, 3, tags=(1,)) for _ in range(3)]
            b = [cfree.random_word(d, trng, 3, tags=(2,)) for _ in range(3)]
            g = cfree.mixed_gram(phi1, phi2, a, b)
            record("mixed-gram", t, max(0.0, -core.min_eigenvalue(g)), PSD_TOL)

    return table, {"failures": sorted(set(failures))}, not failures


# -- entry point -------------------------------------------------------------------------------------------

RUNNERS = {
    "clt": run_clt,
    "transforms": run_transforms,
    "mfs-check": run_mfs_check,
    "cfree": run_cfree,
    "fock-moments": run_fock_moments,
    "theorems": run_theorems,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="monopro", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON file with parameters (flags override it)")
        p.add_argument("--out", help="directory for the CSV table and JSON summary (default: CSV to stdout)")
        p.add_argument("--seed", type=int)

    p = sub.add_parser("clt", help="finite-N moments against the central limit")
    common(p)
    p.add_argument("--m", type=int, help="moment order")
    p.add_argument("--N-list", dest="N_list", help="comma-separated N values")
    p.add_argument("--d", type=int)
    p.add_argument("--eta", help="covariance CP map JSON")
    p.add_argument("--b", help="JSON list of m-1 coefficient matrices, or 'identity'")

    p = sub.add_parser("transforms", help="composition identities of the transforms")
    common(p)
    for flag in ("d", "trials", "M", "N", "L"):
        p.add_argument(f"--{flag}", type=int)

    p = sub.add_parser("mfs-check", help="algebra laws of multilinear function series")
    common(p)
    p.add_argument("--d-list", dest="d_list")
    p.add_argument("--order", type=int)
    p.add_argument("--trials", type=int)

    p = sub.add_parser("cfree", help="monotone / free / conditionally free product checks")
    common(p)
    p.add_argument("--d", type=int)
    p.add_argument("--spec1", help="MomentSpec JSON or fock:<module spec JSON>")
    p.add_argument("--spec2", help="MomentSpec JSON or fock:<module spec JSON>")
    p.add_argument("--check", choices=CFREE_CHECKS)
    p.add_argument("--trials", type=int)
    p.add_argument("--maxlen", type=int)

    p = sub.add_parser("fock-moments", help="vacuum moments of words in G/C/A operators")
    common(p)
    p.add_argument("--module", help="module spec JSON")
    for flag in ("d", "K", "L"):
        p.add_argument(f"--{flag}", type=int)
    p.add_argument("--mode", choices=("monotone", "weakly_monotone"))
    p.add_argument("--word", action="append", help="e.g. 'G1 G2 G1' (repeatable)")

    p = sub.add_parser("theorems", help="run the whole verification suite")
    common(p)
    for flag in ("d", "K", "L", "M", "N", "trials"):
        p.add_argument(f"--{flag}", type=int)
    p.add_argument("--L-transforms", dest="L_transforms", type=int)
    p.add_argument("--only", help=f"comma-separated tags from: {', '.join(THEOREM_TAGS)}")
    p.add_argument("--eta", help="covariance CP map JSON used for every index")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args.command, args)
        table, summary, ok = RUNNERS[args.command](cfg)
    except ConfigError as exc:
        print(f"monopro {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MonoproError as exc:
        print(f"monopro {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    summary = {"command": args.command, "config": cfg, "passed": ok, **summary}
    _emit(args.command, args.out, table, summary)
    if not ok:
        print(f"monopro {args.command}: FAILED {summary.get('failures', '')}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
