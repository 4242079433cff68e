"""Acceptance criteria, one test each, each printing a single PASS/FAIL line.

Run under pytest (lines are repeated in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""
import contextlib
import io
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from cpsdapprox import serialize
from cpsdapprox.caratheodory import low_rank_psd_approx
from cpsdapprox.cli import main as cli_main
from cpsdapprox.generators import cp_geometric_instance, identity_instance, random_psd_instance
from cpsdapprox.jl import jl_dimension, jl_project, verify_jl
from cpsdapprox.linalg import is_psd, numerical_rank
from cpsdapprox.pipeline import ApproxParams, approximate, epsilon1, epsilon2, sqrt_ineq_check, stage1
from cpsdapprox.rep import GramRep, compress_rep, gram

sys.path.insert(0, str(Path(__file__).parent))
from conftest import skewed_instance  # noqa: E402


def _cli(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli_main([str(a) for a in argv])
    return code, buf.getvalue()


def _spectral_psd(rng, d, trace):
    """Random eigenbasis with a geometrically decaying spectrum of random steepness."""
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    lam = np.exp(-rng.uniform(0, 0.6) * np.arange(d))
    a = (q * lam) @ q.T
    a = (a + a.T) / 2
    return a * (trace / np.trace(a))


def check_caratheodory():
    rng = np.random.default_rng(1)
    worst, runs, strategies = 0.0, 0, set()
    for seed in range(100):
        d = int(rng.integers(10, 51))
        tr = float(rng.uniform(1, 10))
        a = _spectral_psd(rng, d, tr)
        tr = float(np.trace(a))
        for frac in (0.1, 0.3, 0.5):
            eps = frac * tr
            res = low_rank_psd_approx(a, eps, rng_seed=seed)
            strategies.add(res.strategy_used)
            err = float(np.linalg.norm(a - res.approx))
            if not (abs(np.trace(res.approx) - tr) <= 1e-9 * tr and err < eps
                    and res.support_size <= math.ceil(tr**2 / eps**2 - 1e-9)):
                return False, f"seed {seed}, eps {frac}*tr: error {err:.3g}, support {res.support_size}"
            worst = max(worst, err / eps)
            runs += 1
    return True, f"{runs} runs, worst error/eps {worst:.3f}, strategies {sorted(strategies)}"


def check_jl():
    projected = 0
    for seed in range(20):
        x = np.random.default_rng(seed).standard_normal((100, 200))
        for eps in (0.2, 0.3, 0.5):
            res = jl_project(x, eps, rng_seed=seed)
            r = math.ceil(8 * math.log(101) / eps**2)
            if res.target_dim != r or not verify_jl(x, res, eps)[0]:
                return False, f"seed {seed}, eps {eps}: dim {res.target_dim} vs {r}"
            projected += not res.identity
    ok = jl_dimension(100, 0.3) == 411
    return ok, f"60 point sets verified ({projected} genuinely projected), r(100, 0.3) = {jl_dimension(100, 0.3)}"


def check_compression():
    rng = np.random.default_rng(3)
    for seed in range(50):
        n, d = int(rng.integers(2, 7)), int(rng.integers(4, 13))
        span = int(rng.integers(1, d + 1))
        basis, _ = np.linalg.qr(rng.standard_normal((d, span)))
        factors = []
        for _ in range(n):
            w = basis @ rng.standard_normal((span, int(rng.integers(1, span + 1))))
            factors.append(w @ w.T)
        rep = GramRep(np.stack(factors))
        out = compress_rep(rep)
        max_rank = max(numerical_rank(f) for f in rep.factors)
        gram_err = float(np.max(np.abs(gram(out) - gram(rep))))
        side = numerical_rank(rep.factors.sum(axis=0))
        if gram_err > 1e-8 or out.d != side or side > n * max_rank or max_rank > d:
            return False, f"seed {seed}: gram error {gram_err:.2e}, side {out.d}, rank {side}"
    return True, "50 representations, gram preserved to 1e-8, side = rank of the factor sum"


def check_budgets():
    worst = 0.0
    for scale in np.linspace(0.1, 10, 20):
        for frac in np.linspace(0.02, 0.98, 20):
            eps = frac * 0.5 * min(scale, scale**2)
            e1, e2 = epsilon1(scale, eps), epsilon2(scale, eps)
            worst = max(worst, abs(2 * e1 * math.sqrt(scale) + e1**2 - eps / 2) / (eps / 2),
                        abs((6 * e2 + 9 * e2**2) * scale**2 - eps / 2) / (eps / 2))
    grid_ok = all(sqrt_ineq_check(x) for x in np.linspace(0, 0.25, 10_000))
    return worst <= 1e-12 and grid_ok, f"worst relative residual {worst:.2e}, sqrt grid {'holds' if grid_ok else 'fails'}"


def check_end_to_end():
    rng = np.random.default_rng(5)
    cases = [(identity_instance(10), 0.4)]
    for seed in range(20):
        n, d = int(rng.integers(3, 7)), int(rng.integers(10, 41))
        inst = random_psd_instance(n, d, d, seed=seed)
        cases.append((inst, 0.4 * min(inst.ell**2, inst.big_l)))
    for k, (inst, eps) in enumerate(cases):
        for mode in ("stage1_only", "stage2_full"):
            rep = approximate(inst, ApproxParams(eps=eps, mode=mode, seed=k))
            err = float(np.max(np.abs(rep.output - inst.target)))
            bound = rep.bound_first if mode == "stage1_only" else rep.bound_second
            if not (err < eps and rep.rep_side <= bound):
                return False, f"case {k} {mode}: error {err:.3g} vs {eps:.3g}, side {rep.rep_side} vs {bound}"
        if k == 0 and rep.bound_first != 290:
            return False, f"identity first bound {rep.bound_first} != 290"
    return True, f"{len(cases)} instances x 2 modes, identity first bound 290"


def check_crossover():
    _, out_half = _cli(["crossover", "--eps", 0.5])
    _, out_tenth = _cli(["crossover", "--eps", 0.1])
    a, b = int(out_half), int(out_tenth)
    ok = 8e4 / 2 <= a <= 8e4 * 2 and 2.9e6 / 2 <= b <= 2.9e6 * 2
    return ok, f"n*(1/2) = {a}, n*(1/10) = {b}"


def check_cp_mode():
    inst = cp_geometric_instance(5, 0.5)
    rep = approximate(inst, ApproxParams(eps=0.3, cp_mode=True, seed=0))
    err = float(np.max(np.abs(rep.output - inst.target)))
    diag = rep.output_rep.is_diagonal()
    ok = diag and rep.completely_positive and rep.rep_side <= 500 and err < 0.3
    return ok, f"diagonal {diag}, side {rep.rep_side} <= 500, error {err:.3g} < 0.3"


def atom_inner(ri, rj):
    total = 0.0
    for wi, vi in zip(ri.weights, ri.atoms.T):
        for wj, vj in zip(rj.weights, rj.atoms.T):
            total += ri.trace * wi * rj.trace * wj * float(vi @ vj) ** 2
    return total


def check_small_oracle():
    worst = 0.0
    for seed in range(50):
        inst = random_psd_instance(2, 2, 2, seed=seed)
        budget = 0.45 * min(inst.ell**2, inst.big_l)
        rep, metrics = stage1(inst, budget, ApproxParams(eps=2 * budget, seed=seed, threads=1))
        results = metrics["factors"]
        brute = np.array([[atom_inner(ri, rj) for rj in results] for ri in results])
        worst = max(worst, float(np.max(np.abs(brute - gram(rep)))))
        if np.max(np.abs(brute - inst.target)) > budget or not all(is_psd(f) for f in rep.factors):
            return False, f"seed {seed}: brute-force error exceeds budget"
    return worst <= 1e-10, f"50 instances, max deviation from atom recomputation {worst:.2e}"


def check_determinism():
    # 1 thread, all cores (the default) and 4 threads, so a pool runs even on a single core
    thread_args = [["--threads", 1], [], ["--threads", 4]]
    with tempfile.TemporaryDirectory() as tmp:
        inst_path = Path(tmp) / "inst.json"
        inst = skewed_instance(np.random.default_rng(9), 6, 120)
        serialize.write_json(serialize.instance_to_dict(inst), inst_path)
        eps = 0.4 * min(inst.ell**2, inst.big_l)
        for mode in ("stage1", "stage2"):
            outputs = []
            for k, extra in enumerate(thread_args):
                out = Path(tmp) / f"{mode}-{k}.json"
                code, _ = _cli(["approximate", inst_path, "--eps", repr(eps), "--mode", mode, "--seed", 42,
                                *extra, "--out", out])
                if code != 0:
                    return False, f"{mode} with {extra or 'default'} threads exited {code}"
                outputs.append(out.read_bytes())
            if len(set(outputs)) != 1:
                return False, f"{mode}: reports differ across thread counts"
    cores = os.cpu_count() or 1
    return True, f"stage1 and stage2 reports byte-identical for 1, {cores} (all cores) and 4 threads"


CRITERIA = [
    ("1 caratheodory contract", check_caratheodory),
    ("2 random projection contract", check_jl),
    ("3 witness compression", check_compression),
    ("4 budget identities", check_budgets),
    ("5 end-to-end approximation", check_end_to_end),
    ("6 crossover points", check_crossover),
    ("7 completely positive mode", check_cp_mode),
    ("8 small-instance atom oracle", check_small_oracle),
    ("9 thread-count determinism", check_determinism),
]


def test_criterion_1(acceptance):
    acceptance(CRITERIA[0][0], *check_caratheodory())


def test_criterion_2(acceptance):
    acceptance(CRITERIA[1][0], *check_jl())


def test_criterion_3(acceptance):
    acceptance(CRITERIA[2][0], *check_compression())


def test_criterion_4(acceptance):
    acceptance(CRITERIA[3][0], *check_budgets())


def test_criterion_5(acceptance):
    acceptance(CRITERIA[4][0], *check_end_to_end())


def test_criterion_6(acceptance):
    acceptance(CRITERIA[5][0], *check_crossover())


def test_criterion_7(acceptance):
    acceptance(CRITERIA[6][0], *check_cp_mode())


def test_criterion_8(acceptance):
    acceptance(CRITERIA[7][0], *check_small_oracle())


def test_criterion_9(acceptance):
    acceptance(CRITERIA[8][0], *check_determinism())


if __name__ == "__main__":
    failed = 0
    for label, check in CRITERIA:
        ok, detail = check()
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
    raise SystemExit(1 if failed else 0)
