"""Commuting ZZ gates cannot spread an X observable past its first bond.

Builds a brick of R_ZZ rotations on a chain, propagates the local bounds for
A = X0 backwards through it, and prints the table.  Then it compares the
speed-limit commutator bound with the exact value for a few single-qubit
errors.
"""

import numpy as np

from lightcone_shading import oracle as O
from lightcone_shading.circuit import Gate, LayeredCircuit, NoiseChannel, Observable
from lightcone_shading.speed_limit import commutator_bound, layer_bounds

n, reps = 6, 3
layers = []
for _ in range(reps):
    layers.append(tuple(Gate("RZZ", (i, i + 1), 0.7) for i in range(0, n - 1, 2)))
    layers.append(tuple(Gate("RZZ", (i, i + 1), -0.4) for i in range(1, n - 1, 2)))
circuit = LayeredCircuit(n, tuple(layers))
obs = Observable.pauli("X0", n)

table = layer_bounds(circuit, obs)
print("local bounds before the first layer (rows: qubits, columns: I X Y Z)")
print(np.array2string(table[-1].w, precision=3, suppress_small=True))

print("\nerror      speed-limit   exact")
for q, letter in [(0, "Z"), (1, "X"), (1, "Z"), (4, "Y")]:
    ch = NoiseChannel(-1, (q,), letter, 0.01)
    bound = commutator_bound(table[-1], ch, obs.trivial_bound).value
    exact = O.exact_commutator_norms(circuit, obs, ch)["A"]
    print(f"{letter}{q:<8}  {bound:10.4f}  {exact:8.4f}")
