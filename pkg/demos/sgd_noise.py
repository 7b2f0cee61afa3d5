"""Minibatch gradient noise scales like 1/B, measured against the exact form."""

import numpy as np

from reachlab import diffusion, tasks
from reachlab.rng import stream

data = tasks.generate_blobs(3, 120, 3, 2.0, seed=0)
task = tasks.Task(data, tasks.ModelSpec("multinomial-logistic", 3, 3))
w = 0.3 * stream(1).standard_normal(task.model.n_params)

print("B     measured trace   exact trace   Frobenius rel err")
prev = None
for B in (4, 8, 16, 32):
    est = diffusion.noise_covariance(task, w, B, 6000, seed=3)
    exact = diffusion.exact_minibatch_covariance(task, w, B)
    rel = np.linalg.norm(est - exact) / np.linalg.norm(exact)
    tr = float(np.trace(est))
    note = "" if prev is None else f"   trace ratio vs previous: {prev / tr:.3f}"
    print(f"{B:<5d} {tr:14.5f} {float(np.trace(exact)):13.5f} {rel:19.4f}{note}")
    prev = tr

print("\ndoubling the batch halves the covariance; the measured matrix")
print("matches the per-sample covariance divided by B, entry for entry")
