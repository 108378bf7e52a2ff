#!/usr/bin/env python3
"""Fit the 10-5 ReLU controller used by the double-integrator test scenarios.

Deterministic Adam on data from a saturated LQR-style state feedback for
    x(t+1) = [[1, 1], [0, 1]] x(t) + [[0.5], [1]] u(t).
Writes the weights JSON consumed by the tests; rerunning reproduces the file
byte for byte.
"""

import json
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "di_controller_10_5.json"


def dare_gain(a, b, q, r, iters=500):
    p = q.copy()
    for _ in range(iters):
        btp = b.T @ p
        k = np.linalg.solve(r + btp @ b, btp @ a)
        p = q + a.T @ p @ (a - b @ k)
    return k


def main():
    rng = np.random.default_rng(20240517)
    a = np.array([[1.0, 1.0], [0.0, 1.0]])
    b = np.array([[0.5], [1.0]])
    gain = dare_gain(a, b, np.eye(2), np.array([[1.0]]))
    print("feedback gain:", gain)

    x_train = rng.uniform(-8.0, 8.0, size=(4000, 2))
    y_train = np.clip(-(x_train @ gain.T), -1.0, 1.0)

    sizes = [2, 10, 5, 1]
    params = []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        params.append([rng.normal(size=(n_out, n_in)) * np.sqrt(2.0 / n_in),
                       np.zeros(n_out)])

    def forward(x):
        acts = [x]
        h = x
        for i, (w, v) in enumerate(params):
            z = h @ w.T + v
            h = np.maximum(z, 0.0) if i < len(params) - 1 else z
            acts.append(h)
        return acts

    moments = [[np.zeros_like(w), np.zeros_like(v)] for w, v in params]
    velocity = [[np.zeros_like(w), np.zeros_like(v)] for w, v in params]
    lr, beta1, beta2, eps = 1e-2, 0.9, 0.999, 1e-8
    step = 0
    for epoch in range(400):
        order = rng.permutation(x_train.shape[0])
        for start in range(0, x_train.shape[0], 256):
            idx = order[start:start + 256]
            xb, yb = x_train[idx], y_train[idx]
            acts = forward(xb)
            grad_out = 2.0 * (acts[-1] - yb) / xb.shape[0]
            grads = []
            delta = grad_out
            for i in reversed(range(len(params))):
                w, _ = params[i]
                grads.append([delta.T @ acts[i], delta.sum(axis=0)])
                if i:
                    delta = (delta @ w) * (acts[i] > 0)
            grads.reverse()
            step += 1
            for i, (gw, gv) in enumerate(grads):
                for j, g in enumerate((gw, gv)):
                    moments[i][j] = beta1 * moments[i][j] + (1 - beta1) * g
                    velocity[i][j] = beta2 * velocity[i][j] + (1 - beta2) * g * g
                    m_hat = moments[i][j] / (1 - beta1 ** step)
                    v_hat = velocity[i][j] / (1 - beta2 ** step)
                    params[i][j] = params[i][j] - lr * m_hat / (np.sqrt(v_hat) + eps)
        if epoch % 100 == 99:
            pred = forward(x_train)[-1]
            print(f"epoch {epoch + 1}: mse {np.mean((pred - y_train) ** 2):.6f}")

    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w", encoding="utf-8") as fh:
        json.dump({"weights": [w.tolist() for w, _ in params],
                   "biases": [v.tolist() for _, v in params]}, fh, indent=1)
        fh.write("\n")
    print("wrote", OUT)


if __name__ == "__main__":
    main()
