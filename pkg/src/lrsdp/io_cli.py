"""File formats (SDPA sparse, Gset graphs, JSON results, CSV traces) and
the command-line interface.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict

import numpy as np

from . import alm, generators, problem as prob, spectral
from .alm import SolverOptions
from .generators import WeightedGraph
from .problem import ManifoldKind, ProblemError, SdpProblem, SparseSymMatrix

TRACE_COLUMNS = ("k", "p", "sigma", "eps", "eta_p", "eta_d", "eta_g",
                 "eta_max", "gradnorm", "inner_iters", "time")


class FormatError(ProblemError):
    """Malformed input file; message carries the offending line number."""


# --- SDPA sparse format (single PSD block) -----------------------------

def _sdpa_numbers(line):
    return line.replace(",", " ").replace("{", " ").replace("}", " ").split()


def read_sdpa(path):
    """Parse the sparse SDPA dialect restricted to one PSD block.

    Line 1: m. Line 2: number of blocks (must be 1). Line 3: block size n.
    Line 4: the m values of b. Then entry lines "matno blkno i j value" with
    matno 0 for the cost and k in 1..m for constraint k, 1-based
    upper-triangular indices. Duplicate entries are summed. The manifold is
    always Free; manifold kinds are a solver flag, not part of the format.
    """
    with open(path) as fh:
        raw = fh.readlines()
    lines = [(no, ln.strip()) for no, ln in enumerate(raw, start=1)
             if ln.strip() and not ln.lstrip().startswith(('"', "*"))]
    if len(lines) < 3:
        raise FormatError(f"{path}: fewer than three header lines")

    def header_int(pos, what):
        no, text = lines[pos]
        try:
            return int(_sdpa_numbers(text)[0])
        except (ValueError, IndexError):
            raise FormatError(f"{path}:{no}: bad {what} line: {text!r}")

    m = header_int(0, "constraint count")
    nblocks = header_int(1, "block count")
    if nblocks != 1:
        raise FormatError(
            f"{path}:{lines[1][0]}: expected one block, got {nblocks}")
    n = header_int(2, "block size")
    if n <= 0:
        raise FormatError(f"{path}:{lines[2][0]}: block size must be positive")
    if m == 0:
        # a blank rhs line is dropped with the other blank lines
        b = np.zeros(0)
        body = lines[3:]
    else:
        no, text = lines[3]
        try:
            b = np.array([float(t) for t in _sdpa_numbers(text)])
        except ValueError:
            raise FormatError(f"{path}:{no}: bad rhs line: {text!r}")
        if b.size != m:
            raise FormatError(
                f"{path}:{no}: expected {m} rhs values, got {b.size}")
        body = lines[4:]

    entries = {k: [] for k in range(m + 1)}
    for no, text in body:
        toks = _sdpa_numbers(text)
        try:
            matno, blkno, i, j = (int(t) for t in toks[:4])
            val = float(toks[4])
            if len(toks) != 5:
                raise ValueError
        except (ValueError, IndexError):
            raise FormatError(f"{path}:{no}: bad entry line: {text!r}")
        if blkno != 1:
            raise FormatError(f"{path}:{no}: block {blkno} does not exist")
        if not 0 <= matno <= m:
            raise FormatError(f"{path}:{no}: matrix index {matno} out of range")
        if not (1 <= i <= n and i <= j <= n):
            raise FormatError(
                f"{path}:{no}: entry ({i}, {j}) outside upper triangle of "
                f"a {n} x {n} block")
        entries[matno].append((i - 1, j - 1, val))

    def build(trips):
        if not trips:
            return SparseSymMatrix.from_triplets(n, [])
        return SparseSymMatrix.from_triplets(n, trips, accumulate=True)

    C = build(entries[0])
    A = [build(entries[k]) for k in range(1, m + 1)]
    return SdpProblem(n, C, A, b, ManifoldKind.FREE)


def write_sdpa(problem, path):
    """Emit the exact dialect read_sdpa accepts, entries sorted by
    (matno, i, j), values at shortest round-trip precision."""
    with open(path, "w") as fh:
        fh.write(f"{problem.m}\n1\n{problem.n}\n")
        fh.write(" ".join(repr(float(v)) for v in problem.b) + "\n"
                 if problem.m else "\n")
        mats = [(0, problem.C)] + [(k + 1, Ak)
                                   for k, Ak in enumerate(problem.A)]
        for matno, M in mats:
            order = np.lexsort((M.cols, M.rows))
            for idx in order:
                fh.write(f"{matno} 1 {M.rows[idx] + 1} {M.cols[idx] + 1} "
                         f"{repr(float(M.vals[idx]))}\n")


def read_gset(path):
    """Parse the Gset text format: header "N E", then E lines "i j w"."""
    with open(path) as fh:
        raw = fh.readlines()
    lines = [(no, ln.strip()) for no, ln in enumerate(raw, start=1)
             if ln.strip()]
    if not lines:
        raise FormatError(f"{path}: empty file")
    no, text = lines[0]
    toks = text.split()
    try:
        N, E = int(toks[0]), int(toks[1])
    except (ValueError, IndexError):
        raise FormatError(f"{path}:{no}: bad header line: {text!r}")
    edges = []
    for no, text in lines[1:]:
        toks = text.split()
        try:
            i, j = int(toks[0]), int(toks[1])
            w = float(toks[2]) if len(toks) > 2 else 1.0
        except (ValueError, IndexError):
            raise FormatError(f"{path}:{no}: bad edge line: {text!r}")
        if i == j:
            raise FormatError(f"{path}:{no}: self-loop on node {i}")
        edges.append((min(i, j), max(i, j), w))
    if len(edges) != E:
        raise FormatError(
            f"{path}: header promises {E} edges, found {len(edges)}")
    try:
        return WeightedGraph(N, tuple(edges))
    except ProblemError as exc:
        raise FormatError(f"{path}: {exc}")


# --- result documents ---------------------------------------------------

def _matrix_doc(M):
    return {"rows": M.rows.tolist(), "cols": M.cols.tolist(),
            "vals": M.vals.tolist()}


def _matrix_from_doc(n, doc):
    return SparseSymMatrix(n, np.array(doc["rows"], dtype=np.intp),
                           np.array(doc["cols"], dtype=np.intp),
                           np.array(doc["vals"], dtype=float))


def result_document(sdp, solution, options):
    """JSON-serializable record of a solve: problem, options echo, solution
    data (including the factor and multipliers, so residues can be
    recomputed), residues and trace rows."""
    return {
        "problem": {
            "n": sdp.n, "m": sdp.m, "manifold": sdp.manifold.value,
            "objective_sign": sdp.objective_sign,
            "objective_offset": sdp.objective_offset,
            "C": _matrix_doc(sdp.C),
            "A": [_matrix_doc(Ak) for Ak in sdp.A],
            "b": sdp.b.tolist(),
        },
        "options": asdict(options),
        "objective": solution.objective,
        "residues": {"eta_p": solution.residues.eta_p,
                     "eta_d": solution.residues.eta_d,
                     "eta_g": solution.residues.eta_g,
                     "eta_max": solution.residues.eta_max},
        "lambda_min": solution.lambda_min,
        "lambda_max": solution.lambda_max,
        "status": solution.status,
        "iterations": solution.iterations,
        "wall_time": solution.wall_time,
        "Y": solution.Y.Y.tolist(),
        "y": solution.y.tolist(),
        "z": solution.z.tolist(),
        "trace": [asdict(row) for row in solution.trace],
    }


def problem_from_document(doc):
    pd = doc["problem"]
    n = pd["n"]
    return SdpProblem(
        n, _matrix_from_doc(n, pd["C"]),
        [_matrix_from_doc(n, Ad) for Ad in pd["A"]],
        np.array(pd["b"], dtype=float), ManifoldKind(pd["manifold"]),
        objective_sign=pd["objective_sign"],
        objective_offset=pd["objective_offset"])


def write_result(doc, path):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def write_trace_csv(trace, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for row in trace:
            d = asdict(row)
            writer.writerow([repr(d[c]) if isinstance(d[c], float) else d[c]
                             for c in TRACE_COLUMNS])


def check_document(doc, tol):
    """Recompute the KKT residues of a stored solution from its own data.

    The dual slack is rebuilt from the stored multipliers,
    S = C - A*(y) - B*(z), independent of the penalty bookkeeping.
    """
    sdp = problem_from_document(doc)
    Y = np.array(doc["Y"], dtype=float)
    y = np.array(doc["y"], dtype=float)
    z = np.array(doc["z"], dtype=float)
    S = sdp.C.to_dense() - prob.adjoint_dense(sdp, y)
    if sdp.manifold is ManifoldKind.UNIT_TRACE:
        S = S - z[0] * np.eye(sdp.n)
    elif sdp.manifold is ManifoldKind.UNIT_DIAGONAL:
        S = S - np.diag(z)
    vals = np.linalg.eigvalsh(0.5 * (S + S.T))
    res = prob.kkt_residues(sdp, Y, y, z, float(vals[0]), float(vals[-1]))
    return res, res.eta_max <= tol


# --- command-line interface ---------------------------------------------

class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        raise _UsageError(f"{self.prog}: error: {message}\n"
                          f"{self.format_usage()}")


def _add_family_flags(p):
    p.add_argument("--q", type=int, default=10,
                   help="number of binary/sphere variables")
    p.add_argument("--s", type=int, default=3, help="completion rows")
    p.add_argument("--t", type=int, default=3, help="completion columns")
    p.add_argument("--rank", type=int, default=1, help="completion rank")
    p.add_argument("--samples", type=int, default=None,
                   help="completion sample count (default: all entries)")


def _add_solver_flags(p):
    defaults = SolverOptions()
    p.add_argument("--tol", type=float, default=defaults.tol)
    p.add_argument("--p0", type=int, default=defaults.p0)
    p.add_argument("--sigma0", type=float, default=defaults.sigma0)
    p.add_argument("--tau", type=float, default=defaults.tau)
    p.add_argument("--theta", type=float, default=defaults.theta)
    p.add_argument("--delta-ne", type=int, default=defaults.delta_ne)
    p.add_argument("--gamma", type=float, default=defaults.gamma)
    p.add_argument("--seed", type=int, default=defaults.seed)
    p.add_argument("--max-iters", type=int, default=defaults.max_outer_iters)
    p.add_argument("--time-limit", type=float, default=None)


def _build_parser():
    parser = _Parser(prog="lrsdp",
                     description="Low-rank SDP solver and benchmark tools")
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve an SDP", add_help=True)
    ps.add_argument("--input", help="SDPA sparse file")
    ps.add_argument("--generate", metavar="FAMILY",
                    choices=sorted(_FAMILIES),
                    help="built-in family: " + ", ".join(sorted(_FAMILIES)))
    ps.add_argument("--manifold",
                    choices=[k.value for k in ManifoldKind], default=None,
                    help="manifold kind (default: family's natural kind, "
                         "or free for --input)")
    _add_family_flags(ps)
    _add_solver_flags(ps)
    ps.add_argument("--trace", metavar="FILE.csv", help="write trace CSV")
    ps.add_argument("--output", metavar="FILE.json", help="write result JSON")

    pg = sub.add_parser("generate", help="emit an SDPA file from a family")
    pg.add_argument("family", choices=sorted(_FAMILIES))
    _add_family_flags(pg)
    pg.add_argument("--seed", type=int, default=0)
    pg.add_argument("--output", required=True, metavar="FILE.dat-s")

    pc = sub.add_parser("check", help="recompute residues of a stored result")
    pc.add_argument("result", metavar="FILE.json")
    pc.add_argument("--tol", type=float, default=1e-8)
    return parser


def _family_problem(name, args, seed):
    if name == "maxcut-edge":
        return generators.gen_maxcut(generators.unit_edge_graph())
    if name == "maxcut-triangle":
        return generators.gen_maxcut(generators.unit_triangle_graph())
    if name == "bqp":
        Q, c = generators.random_bqp(args.q, seed)
        return generators.gen_bqp_moment(Q, c)
    if name == "quartic":
        return generators.gen_quartic_sphere(
            args.q, generators.random_quartic(args.q, seed))
    if name == "completion":
        samples = args.samples
        if samples is None:
            samples = args.s * args.t
        _, entries = generators.random_completion(
            args.s, args.t, args.rank, samples, seed)
        return generators.gen_matrix_completion(args.s, args.t, entries)
    raise _UsageError(f"unknown family {name!r}")


_FAMILIES = ("maxcut-edge", "maxcut-triangle", "bqp", "quartic", "completion")


def _run_solve(args):
    if (args.input is None) == (args.generate is None):
        raise _UsageError("solve needs exactly one of --input or --generate")
    if args.input is not None:
        sdp = read_sdpa(args.input)
    else:
        sdp = _family_problem(args.generate, args, args.seed)
    if args.manifold is not None \
            and ManifoldKind(args.manifold) is not sdp.manifold:
        sdp = SdpProblem(sdp.n, sdp.C, sdp.A, sdp.b,
                         ManifoldKind(args.manifold),
                         objective_sign=sdp.objective_sign,
                         objective_offset=sdp.objective_offset)
    opts = SolverOptions(
        tol=args.tol, p0=args.p0, sigma0=args.sigma0, tau=args.tau,
        theta=args.theta, delta_ne=args.delta_ne, gamma=args.gamma,
        seed=args.seed, max_outer_iters=args.max_iters,
        max_time=args.time_limit)
    solution = alm.solve(sdp, opts)
    doc = result_document(sdp, solution, opts)
    if args.output:
        write_result(doc, args.output)
    if args.trace:
        write_trace_csv(solution.trace, args.trace)
    r = solution.residues
    print(f"status={solution.status} objective={solution.objective!r} "
          f"eta_max={r.eta_max:.3e} p={solution.Y.p} "
          f"iterations={solution.iterations} time={solution.wall_time:.2f}s")
    return 0 if solution.status == "converged" else 2


def _run_generate(args):
    sdp = _family_problem(args.family, args, args.seed)
    write_sdpa(sdp, args.output)
    print(f"wrote {args.output}: n={sdp.n} m={sdp.m}")
    return 0


def _run_check(args):
    with open(args.result) as fh:
        doc = json.load(fh)
    res, ok = check_document(doc, args.tol)
    print(f"eta_p={res.eta_p:.3e} eta_d={res.eta_d:.3e} "
          f"eta_g={res.eta_g:.3e} eta_max={res.eta_max:.3e} "
          f"{'ok' if ok else 'FAIL'}")
    return 0 if ok else 2


def cli_main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "solve":
            return _run_solve(args)
        if args.command == "generate":
            return _run_generate(args)
        return _run_check(args)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (OSError, ProblemError, json.JSONDecodeError, KeyError,
            ValueError) as exc:
        print(f"lrsdp: {exc}", file=sys.stderr)
        return 1


def main():
    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
