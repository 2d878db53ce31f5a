"""Command-line front end.

Every command prints a short human report, or with ``--json`` a JSON object
carrying ``schema_version``. Output depends only on the arguments.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1

_PI_TOKEN = re.compile(r"^([+-]?(?:\d+(?:\.\d*)?|\.\d+)?)\*?pi(?:/(\d+(?:\.\d+)?))?$")


class CliError(Exception):
    pass


def parse_angle(token: str) -> float:
    """Radians, or a rational multiple of pi such as '2pi/3', '-pi/2', '0.5*pi'."""
    tok = token.strip().replace("π", "pi").replace(" ", "")
    if not tok:
        raise CliError("empty angle")
    m = _PI_TOKEN.match(tok)
    if m:
        num = m.group(1)
        coef = 1.0 if num in ("", "+") else (-1.0 if num == "-" else float(num))
        den = float(m.group(2)) if m.group(2) else 1.0
        return coef * math.pi / den
    try:
        return float(tok)
    except ValueError:
        raise CliError(f"cannot parse angle {token!r}") from None


def parse_angles(text: str, K: int | None = None):
    """Comma-separated free angles theta_1..theta_{K-1}; theta_0 = 0 is implied.

    If exactly K values are given they are taken as the full set.
    """
    from .angles import ProbingAngles

    vals = [parse_angle(t) for t in text.split(",")]
    if K is None:
        K = len(vals) + 1
    if len(vals) == K - 1:
        vals = [0.0, *vals]
    elif len(vals) != K:
        raise CliError(f"expected {K - 1} or {K} angles, got {len(vals)}")
    return ProbingAngles(tuple(vals))


# ---------------------------------------------------------------------------
# output


def _fmt(x, digits: int) -> str:
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        xf = float(x)
        if not math.isfinite(xf):
            return json.dumps(str(xf))
        return format(xf, f".{digits}g")
    if isinstance(x, Fraction):
        return json.dumps(str(x))
    return json.dumps(x)


def dump_json(obj, digits: int = 17) -> str:
    """JSON with floats written at a fixed number of significant digits."""
    if isinstance(obj, dict):
        inner = ", ".join(f"{json.dumps(str(k))}: {dump_json(v, digits)}" for k, v in obj.items())
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dump_json(v, digits) for v in obj) + "]"
    return _fmt(obj, digits)


def _human(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".6g")
    if isinstance(value, (list, tuple)):
        return "(" + ", ".join(_human(v) for v in value) + ")"
    if isinstance(value, dict):
        return ", ".join(f"{k}={_human(v)}" for k, v in value.items())
    return str(value)


def emit(result: dict, args) -> None:
    if args.json:
        payload = {"schema_version": SCHEMA_VERSION, "command": args.command, **result}
        print(dump_json(payload))
    else:
        for k, v in result.items():
            if isinstance(v, list) and v and isinstance(v[0], dict):
                print(f"{k}:")
                for row in v:
                    print("  " + ", ".join(f"{a}={_human(b)}" for a, b in row.items()))
            else:
                print(f"{k}: {_human(v)}")


# ---------------------------------------------------------------------------
# commands


def cmd_classical(args) -> dict:
    from .angles import classical_max_score

    pa = parse_angles(args.theta, args.K)
    info = classical_max_score(pa)
    return {
        "K": pa.K,
        "thetas": list(pa.thetas),
        "classical_score": str(info.classical_score),
        "delta": info.delta,
        "region": info.region,
        "summary": f"{info.classical_score}, {info.region}",
    }


def cmd_osc_bounds(args) -> dict:
    from .oscillator import (
        fit_lower_bounds,
        lower_bound_sequence,
        trace_a3_squared,
        upper_bound_p3_closed,
    )

    ns = list(range(args.n_min, args.n_hat + 1, args.step))
    if not ns or ns[-1] != args.n_hat:
        ns.append(args.n_hat)
    seq = lower_bound_sequence(ns)
    closed, quad = trace_a3_squared()
    result = {
        "lower_bounds": [{"n": n, "p_lower": p} for n, p in seq],
        "upper_bound": upper_bound_p3_closed().value,
        "trace_closed": closed,
        "trace_quadrature": quad,
    }
    fit_rows = [s for s in seq if s[0] >= args.fit_min]
    if len(fit_rows) >= 3:
        rec, coef = fit_lower_bounds(fit_rows)
        result["fit_estimate"] = rec.value
        result["fit_rms"] = rec.tolerance
    if args.csv:
        lines = ["n,p_lower"] + [f"{n},{p:.17g}" for n, p in seq]
        Path(args.csv).write_text("\n".join(lines) + "\n")
        result["csv"] = str(args.csv)
    return result


def cmd_spin_heatmap(args) -> dict:
    from .angles import equivalent_sets, from_vartheta
    from .spin import (
        SpinValue,
        heatmap,
        heatmap_csv,
        heatmap_local_maxima,
        heuristic_peak,
        max_score_spin,
        resonant_indices,
        vartheta_distance,
    )

    s = SpinValue.of(args.j)
    grid = heatmap(s, args.resolution)
    Path(args.out).write_text(heatmap_csv(grid))
    i = int(np.argmax(grid[:, 2]))
    peaks = heatmap_local_maxima(grid, args.resolution)
    matched = 0
    if s.two_j >= 3:
        targets = [heuristic_peak(s, ix) for ix in resonant_indices(s)]
        for v1, v2, _ in peaks:
            pa = from_vartheta((v1, v2))
            if any(vartheta_distance(pa, t) < args.match_radius for t in targets):
                matched += 1
    # symmetry spot check at a fixed off-centre point
    probe = from_vartheta((0.31, -0.17))
    vals = [max_score_spin(s, e) for e in equivalent_sets(probe)]
    return {
        "j": str(s),
        "points": int(grid.shape[0]),
        "max_score": float(grid[i, 2]),
        "argmax_vartheta": [float(grid[i, 0]), float(grid[i, 1])],
        "local_maxima": len(peaks),
        "resonant_matched_peaks": matched,
        "symmetry_residual": float(max(vals) - min(vals)),
        "csv": str(args.out),
    }


def cmd_spin_optimize(args) -> dict:
    from .angles import equally_spaced
    from .spin import (
        OptimizeConfig,
        SpinValue,
        global_peak_guess,
        k_angle_initial,
        optimize_angles,
    )

    s = SpinValue.of(args.j)
    K = args.K
    init = args.init
    if init == "global":
        if K != 3:
            raise CliError("init=global applies to K = 3")
        start = global_peak_guess(s)
    elif init == "equal":
        start = equally_spaced(K)
    elif init == "midpoint":
        start = k_angle_initial(s, K)
    elif init.startswith("resonant:"):
        n1, n2 = (int(x) for x in init.split(":", 1)[1].split(","))
        from .angles import ProbingAngles

        start = ProbingAngles((0.0, n1 * math.pi / s.j, n2 * math.pi / s.j))
    else:
        start = parse_angles(init, K)
    cfg = OptimizeConfig(max_iter=args.max_iter, grad_tol=args.tol, seed=args.seed)
    res = optimize_angles(s, start, cfg)
    return {
        "j": str(s),
        "K": K,
        "initial": list(start.thetas),
        "angles": list(res.angles.thetas),
        "score": res.score,
        "iterations": res.iterations,
        "grad_norm": res.grad_norm,
        "converged": res.converged,
    }


def cmd_sdp(args) -> dict:
    from .entanglement import SdpConfig, SdpProblem, q_total_spin, sdp_ppt_max
    from .spin import SpinValue

    sa, sb = SpinValue.of(args.ja), SpinValue.of(args.jb)
    pa = parse_angles(args.theta, 3)
    sol = sdp_ppt_max(SdpProblem(q_total_spin(sa, sb, pa), sa.dim, sb.dim), SdpConfig())
    return {
        "jA": str(sa),
        "jB": str(sb),
        "theta1": pa.thetas[1],
        "theta2": pa.thetas[2],
        "value": sol.value,
        "residuals": {"primal": sol.primal_residual, "dual_gap": sol.dual_gap_estimate},
        "iterations": sol.iterations,
    }


def cmd_psi4(args) -> dict:
    from .entanglement import P3_CLASSICAL, gme_certify, psi4_scores

    orig, mod = psi4_scores()
    v1 = gme_certify(orig, P3_CLASSICAL, args.tol)
    v2 = gme_certify(mod, P3_CLASSICAL, args.tol)
    return {
        "score_equally_spaced": orig,
        "score_modified": mod,
        "classical_bound": P3_CLASSICAL,
        "gme_equally_spaced": v1.certified,
        "gme_modified": v2.certified,
        "margin_modified": v2.margin,
    }


def cmd_chi4(args) -> dict:
    from .entanglement import P3_CLASSICAL, chi4_scores

    mod, orig = chi4_scores()
    return {
        "score_modified": mod,
        "score_equally_spaced": orig,
        "classical_bound": P3_CLASSICAL,
        "violates_modified": mod > P3_CLASSICAL,
        "violates_equally_spaced": orig > P3_CLASSICAL,
    }


def cmd_wedge(args) -> dict:
    from .wigner import negativity_volume_lower_bound, triple_wedge_bounds

    lo, hi = triple_wedge_bounds(args.lower, args.upper)
    return {
        "p_lower": args.lower,
        "p_upper": args.upper,
        "wedge_lower": lo,
        "wedge_upper": hi,
        "negativity_volume_lower": negativity_volume_lower_bound(args.lower),
    }


def cmd_simulate(args) -> dict:
    from .robustness import BinningScheme, SearchConfig, classical_coarse_search, uniform_scheme, validate_scheme

    pa = parse_angles(args.theta, 3)
    if args.scheme:
        scheme = validate_scheme(json.loads(Path(args.scheme).read_text()))
    elif args.uniform:
        w, off, count = args.uniform.split(",")
        scheme = uniform_scheme(float(w), float(off), int(count))
    else:
        scheme = BinningScheme.sharp()
    res = classical_coarse_search(pa, scheme, SearchConfig(phi_points=args.phi_points))
    return {
        "n_hat": scheme.n_hat,
        "max_coarse_score": str(res.score),
        "argmax_r": res.r,
        "argmax_phi": res.phi,
        "within_classical_bound": res.score <= Fraction(2, 3),
    }


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="precession", description=__doc__.splitlines()[0])
    p.add_argument("--json", action="store_true", help="machine-readable output")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classical", help="classical maximum score of a protocol")
    c.add_argument("--theta", required=True, help="angles, e.g. 2pi/3,4pi/3")
    c.add_argument("--K", type=int, default=None)
    c.set_defaults(func=cmd_classical)

    c = sub.add_parser("osc-bounds", help="oscillator lower/upper bounds")
    c.add_argument("--n-hat", type=int, default=40)
    c.add_argument("--n-min", type=int, default=1)
    c.add_argument("--step", type=int, default=1)
    c.add_argument("--fit-min", type=int, default=10)
    c.add_argument("--csv", default=None)
    c.set_defaults(func=cmd_osc_bounds)

    c = sub.add_parser("spin-heatmap", help="score grid over the interior triangle")
    c.add_argument("--j", required=True)
    c.add_argument("--resolution", type=int, default=41)
    c.add_argument("--out", required=True)
    c.add_argument("--match-radius", type=float, default=0.1)
    c.set_defaults(func=cmd_spin_heatmap)

    c = sub.add_parser("spin-optimize", help="gradient ascent over probing angles")
    c.add_argument("--j", required=True)
    c.add_argument("--K", type=int, default=3)
    c.add_argument("--init", default="global",
                   help="global | equal | midpoint | resonant:n1,n2 | explicit angles")
    c.add_argument("--max-iter", type=int, default=500)
    c.add_argument("--tol", type=float, default=1e-8)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_spin_optimize)

    c = sub.add_parser("sdp", help="PPT separable bound for two spins")
    c.add_argument("--ja", required=True)
    c.add_argument("--jb", required=True)
    c.add_argument("--theta", default="2pi/3,4pi/3")
    c.set_defaults(func=cmd_sdp)

    c = sub.add_parser("psi4", help="four-qubit GME example")
    c.add_argument("--tol", type=float, default=1e-3)
    c.set_defaults(func=cmd_psi4)

    c = sub.add_parser("chi4", help="two-mode oscillator example")
    c.set_defaults(func=cmd_chi4)

    c = sub.add_parser("wedge", help="score bounds to triple-wedge bounds")
    c.add_argument("--lower", type=float, default=0.709364)
    c.add_argument("--upper", type=float, default=0.730822)
    c.set_defaults(func=cmd_wedge)

    c = sub.add_parser("simulate", help="coarse-grained classical adversary")
    c.add_argument("--theta", default="2pi/3,4pi/3")
    g = c.add_mutually_exclusive_group()
    g.add_argument("--scheme", help="JSON file with an array of bin endpoints")
    g.add_argument("--uniform", help="width,offset,count")
    c.add_argument("--phi-points", type=int, default=10_000)
    c.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    from .linalg import ConvergenceError, ValidationError

    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
    except (CliError, ValidationError, ConvergenceError, OSError, ValueError) as exc:
        print(f"error ({args.command}): {exc}", file=sys.stderr)
        return 2
    emit(result, args)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
