"""
验收检查脚本
重算 W~ 计数表, β 恒等式, 完全复形谱, 矩收敛与局部弱极限, 逐项打印 PASS/FAIL
"""

import argparse
import math
import os
import sys
import logging

import numpy as np

sys.path.append(os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src"))

from dotenv import load_dotenv

from lmspectra import settings
from lmspectra.adjacency import build_matrix, complete_adjacency, complete_eigensystem
from lmspectra.cells import sample_complex
from lmspectra.canonical import ball_signature
from lmspectra.limits import compare_line_graph_to_dgw, mass_transport_check, phi, root_spectral_moments, \
    sample_dgw, sample_poisson_dtree, survival_fraction
from lmspectra.lm_types import GWConfig, MatrixKind, OffspringLaw, SampleMode
from lmspectra.spectra import eigenvalues_dense, esd_moment, frobenius_normalized, ks_distance, reflect, \
    scaled_moment_check
from lmspectra.words import beta_value, catalan_check, enumerate_tilde_W, expected_moment, signs_by_s

load_dotenv()

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

TABLE = {
    2: {3: [0, 2, 2, 6, 10, 22, 42, 86], 4: [0, 0, 0, 8, 20, 84, 224, 688],
        5: [0, 0, 0, 0, 0, 40, 168, 896], 6: [0, 0, 0, 0, 0, 0, 0, 224]},
    3: {4: [0, 3, 6, 21, 60, 183, 546, 1641], 5: [0, 0, 0, 18, 90, 486, 2142, 9198],
        6: [0, 0, 0, 0, 0, 135, 1134, 8316], 7: [0, 0, 0, 0, 0, 0, 0, 1134]},
}


def report(name: str, passed: bool, detail: str = "") -> bool:
    if passed:
        logger.info(f"PASS  {name} {detail}")
    else:
        logger.error(f"FAIL  {name} {detail}")
    return passed


def check_table():
    """W~ 计数表 (d = 2, 3; k = 1..8)"""
    mismatches = 0
    for d, rows in TABLE.items():
        for k in range(1, 9):
            counts = enumerate_tilde_W(d, k).coefficients
            mismatches += sum(counts.get(s, 0) != row[k - 1] for s, row in rows.items())
    return report("table", mismatches == 0, f"({mismatches} mismatches)")


def check_beta_and_catalan():
    ok = all(enumerate_tilde_W(d, 1).nonzero() == {} for d in (2, 3, 4))
    ok &= all(enumerate_tilde_W(d, 2).value(1) == d and enumerate_tilde_W(d, 3).value(1) == d * (d - 1)
              for d in (2, 3, 4))
    ok &= all(catalan_check(d, k) for d in (2, 3) for k in (2, 4, 6, 8))
    ok &= all(set(signs_by_s(2, k)[s]) == {(-1) ** k} for k in range(2, 7) for s in signs_by_s(2, k))
    return report("beta / catalan / sign", ok)


def check_complete_spectra():
    ok = True
    for d, n in ((2, 6), (2, 8), (3, 7)):
        for signed in (False, True):
            kind = MatrixKind.COMPLETE_SIGNED if signed else MatrixKind.COMPLETE_UNSIGNED
            dense = eigenvalues_dense(complete_adjacency(n, d, signed)).as_array()
            closed = complete_eigensystem(n, d, kind).values()
            ok &= bool(np.allclose(dense, closed, atol=1e-8))
    return report("complete spectra", ok)


def check_moments(seeds: int = 20):
    """n=100, λ=1 的 m_2, m_3 与精确期望比较"""
    n, d, lam = 100, 2, 1.0
    results = {2: [], 3: []}
    for seed in range(seeds):
        sample = sample_complex(n, d, lam / n, seed)
        esd = eigenvalues_dense(build_matrix(sample, MatrixKind.CENTRED_UNSIGNED))
        for k in results:
            results[k].append(esd_moment(esd, k).value)
    ok = True
    for k, values in results.items():
        mean, se = np.mean(values), np.std(values, ddof=1) / math.sqrt(seeds)
        exact = expected_moment(d, k, n, lam / n)
        ok &= report(f"m_{k}", abs(mean - exact) <= 3 * se and abs(mean - 2) <= 0.2,
                     f"mean {mean:.4f} ± {se:.4f}, exact {exact:.4f}")
    return ok


def check_reflection(seeds: int = 20):
    n, d = 100, 2
    good = 0
    for seed in range(seeds):
        sample = sample_complex(n, d, 1.0 / n, seed)
        a = eigenvalues_dense(build_matrix(sample, MatrixKind.UNSIGNED))
        b = eigenvalues_dense(build_matrix(sample, MatrixKind.SIGNED))
        good += ks_distance(a, reflect(b), tol=1e-8) <= settings.KS_TOL
    return report("reflection", good >= 18, f"({good}/{seeds} seeds)")


def check_frobenius(seeds: int = 20):
    n, d = 500, 2
    values = [frobenius_normalized(build_matrix(sample_complex(n, d, 1.0 / n, seed), MatrixKind.CENTRED_UNSIGNED))
              for seed in range(seeds)]
    mean = float(np.mean(values))
    return report("frobenius", abs(mean - math.sqrt(2)) <= 0.05 * math.sqrt(2), f"mean {mean:.4f}")


def check_semicircle():
    sample = sample_complex(3000, 2, 30 / 3000, mode=SampleMode.LAZY)
    m2 = scaled_moment_check(sample, 30, 2)
    m4 = scaled_moment_check(sample, 30, 4)
    return report("semicircle", 0.9 <= m2 <= 1.1 and 1.8 <= m4 <= 2.2, f"m2 {m2:.3f}, m4 {m4:.3f}")


def check_local_limit():
    lwc = compare_line_graph_to_dgw(2000, 2, 1.0, 2, 5000)
    se = math.sqrt(math.exp(-1) * (1 - math.exp(-1)) / 5000)
    ok = lwc.tv <= 0.08 and abs(lwc.root_isolated_line - math.exp(-1)) <= 3 * se
    ok &= all(ball_signature(phi(sample_poisson_dtree(d, 1.0, 4, seed)))
              == ball_signature(sample_dgw(GWConfig(d=d, lam=1.0, depth=2, seed=seed)))
              for d in (2, 3) for seed in range(1000))
    return report("local limit", ok, f"TV {lwc.tv:.4f}, P(isolated) {lwc.root_isolated_line:.4f}")


def check_unimodularity():
    ok = all(mass_transport_check(2, 1.0, f_id, samples=100_000).holds(z=3.0) for f_id in ("f1", "f2"))
    fixed = mass_transport_check(2, 1.0, "f2", samples=1000, offspring=OffspringLaw.FIXED, fixed_blocks=2)
    return report("unimodularity", ok and not fixed.holds(z=3.0), f"fixed blocks: {fixed.lhs:.3f} vs {fixed.rhs:.3f}")


def check_atomicity(samples: int = 10_000):
    """λ=0.4, d=2: 灭绝比例与 (A²)_oo 的均值"""
    extinct = survival_fraction(2, 0.4, depth_cap=60, vertex_cap=100_000, samples=samples)
    squares = [root_spectral_moments(sample_dgw(GWConfig(d=2, lam=0.4, depth=1, seed=seed)), 2)[1]
               for seed in range(samples)]
    mean, se = float(np.mean(squares)), float(np.std(squares, ddof=1) / math.sqrt(samples))
    ok = extinct >= 0.99 and abs(mean - float(beta_value(2, 2, 0.4))) <= 3 * se
    return report("atomicity", ok, f"die-out {extinct:.4f}, (A²)_oo {mean:.4f} ± {se:.4f}")


def main():
    parser = argparse.ArgumentParser(description="lm-spectra acceptance report")
    parser.add_argument("--quick", action="store_true", help="skip the Monte Carlo checks")
    args = parser.parse_args()

    checks = [check_table, check_beta_and_catalan, check_complete_spectra]
    if not args.quick:
        checks += [check_moments, check_reflection, check_frobenius, check_semicircle, check_local_limit,
                   check_unimodularity, check_atomicity]

    logger.info("=" * 50)
    results = [check() for check in checks]
    logger.info("=" * 50)
    logger.info(f"{sum(results)}/{len(results)} checks passed")
    return 0 if all(results) else 1


if __name__ == "__main__":
    sys.exit(main())
