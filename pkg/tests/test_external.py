import shlex
import sys

import numpy as np
import pytest

from qreg import brute_force, external_sample
from qreg.errors import (
    EnergyMismatchError,
    SamplerProcessError,
    SamplerProtocolError,
    SamplerTimeoutError,
)

from test_samplers import random_qubo

REFERENCE_CMD = f"{shlex.quote(sys.executable)} -m qreg.reference_solver"


def child(code: str) -> str:
    return f"{shlex.quote(sys.executable)} -c {shlex.quote(code)}"


class TestReferenceSolver:
    def test_matches_in_process_brute_force(self):
        rng = np.random.default_rng(0)
        for i in range(3):
            q = random_qubo(rng, 8 + i)
            exact = brute_force(q)
            via_pipe = external_sample(q, REFERENCE_CMD, num_reads=10, timeout=60)
            assert via_pipe.best.energy == pytest.approx(exact.best.energy, abs=1e-9)
            assert np.array_equal(via_pipe.best.bits, exact.best.bits)
            assert via_pipe.num_reads == 10
            assert via_pipe.sampler_name == "external"

    def test_oversized_problem_fails_cleanly(self):
        rng = np.random.default_rng(1)
        q = random_qubo(rng, 17)
        with pytest.raises(SamplerProcessError, match="status 1"):
            external_sample(q, REFERENCE_CMD, num_reads=1, timeout=60)


class TestProtocolErrors:
    def test_nonzero_exit(self):
        rng = np.random.default_rng(2)
        q = random_qubo(rng, 4)
        cmd = child("import sys; sys.exit(3)")
        with pytest.raises(SamplerProcessError, match="status 3"):
            external_sample(q, cmd, num_reads=1, timeout=30)

    def test_garbage_stdout(self):
        rng = np.random.default_rng(3)
        q = random_qubo(rng, 4)
        cmd = child("import sys; sys.stdin.readline(); print('not json')")
        with pytest.raises(SamplerProtocolError):
            external_sample(q, cmd, num_reads=1, timeout=30)

    def test_missing_fields(self):
        rng = np.random.default_rng(4)
        q = random_qubo(rng, 4)
        cmd = child("import sys; sys.stdin.readline(); print('{\"samples\": [[0,0,0,0]]}')")
        with pytest.raises(SamplerProtocolError):
            external_sample(q, cmd, num_reads=1, timeout=30)

    def test_energy_mismatch(self):
        rng = np.random.default_rng(5)
        q = random_qubo(rng, 4)
        code = (
            "import sys, json; sys.stdin.readline(); "
            "print(json.dumps({'samples': [[0,0,0,0]], 'energies': [123.456], "
            "'occurrences': [1], 'info': {}}))"
        )
        with pytest.raises(EnergyMismatchError):
            external_sample(q, child(code), num_reads=1, timeout=30)

    def test_non_binary_sample(self):
        rng = np.random.default_rng(6)
        q = random_qubo(rng, 4)
        code = (
            "import sys, json; sys.stdin.readline(); "
            "print(json.dumps({'samples': [[0,2,0,0]], 'energies': [0.0], "
            "'occurrences': [1], 'info': {}}))"
        )
        with pytest.raises(SamplerProtocolError):
            external_sample(q, child(code), num_reads=1, timeout=30)

    def test_hang_times_out(self):
        rng = np.random.default_rng(7)
        q = random_qubo(rng, 4)
        cmd = child("import time; time.sleep(30)")
        with pytest.raises(SamplerTimeoutError):
            external_sample(q, cmd, num_reads=1, timeout=0.5)

    def test_unlaunchable_command(self):
        rng = np.random.default_rng(8)
        q = random_qubo(rng, 4)
        with pytest.raises(SamplerProcessError, match="launch"):
            external_sample(q, "/nonexistent/solver-binary", num_reads=1, timeout=5)
