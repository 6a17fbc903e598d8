"""Independent reference trace for the synthetic embedding recipe.

FNV-1a 64 of the token bytes XOR seed -> splitmix64 stream -> fp64 in [-1,1)
-> fp32 -> fp32 L2 normalisation (sequential sum of squares).
"""
import sys
import numpy as np

MASK = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK
    return h


def splitmix64(state):
    state = (state + 0x9E3779B97F4A7C15) & MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return state, z ^ (z >> 31)


def embed(token: str, seed: int, dim: int):
    state = fnv1a64(token.encode()) ^ seed
    v = []
    for _ in range(dim):
        state, u = splitmix64(state)
        v.append(np.float32((u / 2.0**64) * 2.0 - 1.0))
    v = np.array(v, dtype=np.float32)
    acc = np.float32(0)
    for x in v:
        acc = np.float32(acc + np.float32(x * x))
    norm = np.float32(np.sqrt(acc))
    return [np.float32(x / norm) for x in v]


if __name__ == "__main__":
    tok = sys.argv[1] if len(sys.argv) > 1 else "a"
    for x in embed(tok, 1, 4):
        print(f"{float(x):.9g}  0x{np.float32(x).view(np.uint32):08x}")
