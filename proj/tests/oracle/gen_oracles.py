"""Independent reference values for the C++ tests.

Run once with numpy; the output tests/oracle/frozen.json is checked in and
read by the test binaries. Nothing here imports the C++ code.
"""
import json
import math
from pathlib import Path

import numpy as np


def toy_markov_case(seed, tau, batch):
    """Toy net 2->3 (+chain bias) -> [3->3 block] -> 1, tanh, MSE loss.

    Backward is written out by hand, with the penal term added to the
    gradient reaching the block output.
    """
    rng = np.random.default_rng(seed)
    p = {
        "stem.weight": rng.uniform(-0.8, 0.8, (2, 3)),
        "stem.bias": rng.uniform(-0.2, 0.2, 3),
        "chain.bias": rng.uniform(-0.2, 0.2, 3),
        "block1.weight": rng.uniform(-0.8, 0.8, (3, 3)),
        "block1.bias": rng.uniform(-0.2, 0.2, 3),
        "head.weight": rng.uniform(-0.8, 0.8, (3, 1)),
        "head.bias": rng.uniform(-0.2, 0.2, 1),
    }
    x_in = rng.uniform(-5, 5, (batch, 2))
    y = (x_in[:, 0] ** 2 - x_in[:, 1] ** 2).reshape(batch, 1)

    h = np.tanh(x_in @ p["stem.weight"] + p["stem.bias"])
    x0 = h + p["chain.bias"]
    z = np.tanh(x0 @ p["block1.weight"] + p["block1.bias"])
    x1 = x0 + z
    pred = x1 @ p["head.weight"] + p["head.bias"]
    r = pred - y
    loss = float(np.mean(r ** 2))

    g_pred = 2.0 * r / r.size
    g = {"head.weight": x1.T @ g_pred, "head.bias": g_pred.sum(axis=0)}
    g_x1 = g_pred @ p["head.weight"].T
    g_z = g_x1 + tau * z
    g_pre_block = g_z * (1.0 - z ** 2)
    g["block1.weight"] = x0.T @ g_pre_block
    g["block1.bias"] = g_pre_block.sum(axis=0)
    g_x0 = g_x1 + g_pre_block @ p["block1.weight"].T
    g["chain.bias"] = g_x0.sum(axis=0)
    g_pre_stem = g_x0 * (1.0 - h ** 2)
    g["stem.weight"] = x_in.T @ g_pre_stem
    g["stem.bias"] = g_pre_stem.sum(axis=0)

    cos = []
    for zs, gs in zip(z, g_x1):
        nz, ng = np.linalg.norm(zs), np.linalg.norm(gs)
        cos.append(0.0 if nz < 1e-12 or ng < 1e-12 else float(zs @ -gs / (nz * ng)))

    def flat(a):
        return [float(v) for v in np.asarray(a).ravel()]

    return {
        "seed": seed,
        "tau": tau,
        "params": {k: {"shape": list(v.shape), "data": flat(v)} for k, v in p.items()},
        "inputs": flat(x_in),
        "targets": flat(y),
        "batch": batch,
        "loss": loss,
        "grads": {k: flat(v) for k, v in g.items()},
        "z": flat(z),
        "g_x": flat(g_x1),
        "epsilon_prime": float(np.mean(cos)),
    }


def sgd_unroll(p, grads, lr, momentum, wd):
    buf, out = 0.0, []
    for g in grads:
        buf = momentum * buf + (g + wd * p)
        p = p - lr * buf
        out.append(p)
    return out


def main():
    frozen = {
        "toy_markov": [toy_markov_case(s, tau, 5) for s, tau in ((11, 0.25), (12, 1e-4), (13, 0.0))],
        "cosine_122_212": 8.0 / 9.0,
        "lemma3_bound_a1_L10_Z1_d05": 2.0 * math.log(10.0) / 2.5,
        "condition_lhs_L10": 10 * math.log(10),
        "condition_lhs_L50": 50 * math.log(50),
        "condition_rhs_D10_d1_a1_Z1": 100.0 / 2.0,
        "sgd_momentum_unroll": sgd_unroll(1.0, [1.0, 1.0], 0.1, 0.9, 0.0),
        "sgd_wd_unroll": sgd_unroll(2.0, [0.5, -0.25, 1.0], 0.05, 0.5, 0.1),
        "geometric_contraction_k05": [0.25 ** l for l in range(6)],
    }
    out = Path(__file__).with_name("frozen.json")
    out.write_text(json.dumps(frozen, indent=1) + "\n")


if __name__ == "__main__":
    main()
