"""Regenerate the bundled JSON fixtures in src/ipstruct/fixtures."""

from pathlib import Path

import numpy as np

from ipstruct.channel import (
    PAULI,
    bitflip_three_qubit,
    depolarizing_qubit,
    make_paper_example,
    outer,
    unitary_channel,
)
from ipstruct.serialize import channel_to_dict, code_to_dict, save_json

OUT = Path(__file__).resolve().parents[1] / "src" / "ipstruct" / "fixtures"


def ket_state(v):
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def main():
    OUT.mkdir(exist_ok=True)
    save_json(channel_to_dict(make_paper_example()), OUT / "paper_example.json")
    save_json(channel_to_dict(depolarizing_qubit()), OUT / "depolarizing_qubit.json")
    save_json(channel_to_dict(bitflip_three_qubit(0.1)), OUT / "bitflip_channel.json")
    U = np.diag([1, np.exp(1j)])
    save_json(channel_to_dict(unitary_channel(U), label="phase_rotation_1rad"),
              OUT / "phase_rotation.json")

    # sigma_A (x) tau_B with sigma_A on span{|0>, |1>} of the qutrit
    tau_b = np.diag([0.25, 0.75])
    basis = [np.kron(outer(i, j, 3), tau_b) for i in range(2) for j in range(2)]
    samples = [np.kron(ket_state(np.r_[v, 0]), tau_b)
               for v in ([1, 0], [0, 1], [1, 1], [1, 1j], [2, -1])]
    save_json(code_to_dict(basis, samples), OUT / "paper_example_fixed_code.json")

    save_json(code_to_dict([outer(0, 0, 2), outer(1, 1, 2)],
                           [outer(0, 0, 2), outer(1, 1, 2), np.eye(2) / 2]),
              OUT / "classical_bit_code.json")

    zero, one = np.eye(8)[0], np.eye(8)[7]
    basis = [np.outer(a, b) for a in (zero, one) for b in (zero, one)]
    samples = [ket_state(zero), ket_state(one), ket_state(zero + one),
               ket_state(zero - one), ket_state(zero + 1j * one)]
    save_json(code_to_dict(basis, samples), OUT / "bitflip_code.json")

    save_json(code_to_dict(list(PAULI.values()),
                           [ket_state([1, 0]), ket_state([1, 1]), ket_state([1, 1j])]),
              OUT / "qubit_full_code.json")
    save_json(code_to_dict([outer(0, 0, 2), outer(1, 1, 2), PAULI["X"]],
                           [ket_state([1, 0]), ket_state([0, 1]), ket_state([1, 1])]),
              OUT / "qubit_sigma_x_code.json")


if __name__ == "__main__":
    main()
