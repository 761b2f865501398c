"""Reference external sampler: exhaustive QUBO solver behind the JSON protocol.

Run as ``python -m qreg.reference_solver``.  Reads one request object from
stdin ({"dim", "linear", "quadratic", "offset", "num_reads"}), enumerates
all assignments for dim <= 16, and answers with the optimum on stdout.  The
energy arithmetic here is deliberately independent of the rest of the
package so that protocol round-trip tests exercise two separate
implementations.
"""

from __future__ import annotations

import json
import sys

import numpy as np

MAX_DIM = 16


def solve(request: dict) -> dict:
    dim = int(request["dim"])
    if dim > MAX_DIM:
        raise ValueError(f"reference solver enumerates 2^dim states; dim {dim} > {MAX_DIM}")
    linear = np.asarray(request["linear"], dtype=np.float64)
    if linear.shape != (dim,):
        raise ValueError(f"linear must have length {dim}")
    num_reads = int(request.get("num_reads", 1))

    idx = np.arange(1 << dim, dtype=np.int64)
    bits = ((idx[:, None] >> np.arange(dim)) & 1).astype(np.float64)
    energies = bits @ linear
    for i, j, v in request.get("quadratic", []):
        energies += v * bits[:, int(i)] * bits[:, int(j)]

    best = int(np.argmin(energies))
    return {
        "samples": [[int(b) for b in bits[best]]],
        "energies": [float(energies[best])],
        "occurrences": [num_reads],
        "info": {"solver": "qreg-reference-bruteforce", "states_enumerated": int(1 << dim)},
    }


def main() -> int:
    line = sys.stdin.readline()
    try:
        request = json.loads(line)
        response = solve(request)
    except Exception as exc:  # any failure is a protocol failure for the parent
        print(f"reference solver error: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(json.dumps(response) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
