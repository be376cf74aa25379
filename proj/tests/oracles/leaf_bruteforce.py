#!/usr/bin/env python3
"""Brute-force reference for the exact moment fixtures.

Enumerates every leaf configuration of the depth-n d-ary tree, computes the
likelihood of the leaves under each root state by summing over *all* internal
spin assignments (no pruning, no recursion), and applies Bayes' rule.
Writes level,x,z,delta,e_x_minus rows in the CLI's `exact` CSV layout.
"""
import itertools
import sys


def transition(pi1, theta):
    pi = (pi1, 1 - pi1)
    return [[theta * (i == j) + (1 - theta) * pi[j] for j in range(2)] for i in range(2)]


def leaf_likelihoods(d, n, M):
    # nodes are numbered level by level; node k's children are k*d+1..k*d+d
    internal = sum(d ** k for k in range(n))
    leaves = d ** n
    parent = {}
    for k in range(internal):
        for c in range(d):
            parent[k * d + 1 + c] = k
    table = {}
    for spins_internal in itertools.product((0, 1), repeat=internal - 1):
        for root in (0, 1):
            spins = [root, *spins_internal]
            w_int = 1.0
            for v in range(1, internal):
                w_int *= M[spins[parent[v]]][spins[v]]
            for leaf_spins in itertools.product((0, 1), repeat=leaves):
                w = w_int
                for i, s in enumerate(leaf_spins):
                    w *= M[spins[parent[internal + i]]][s]
                table.setdefault(leaf_spins, [0.0, 0.0])[root] += w
    return table


def moments(d, n, pi1, theta):
    pi2 = 1 - pi1
    if n == 0:
        return (pi2, pi2 * pi2, 1.0, pi1)
    M = transition(pi1, theta)
    x = z = delta = exm = 0.0
    for l1, l2 in leaf_likelihoods(d, n, M).values():
        p_a = pi1 * l1 + pi2 * l2
        f1 = pi1 * l1 / p_a
        f2 = 1 - f1
        x += l1 * f1
        z += l1 * (f1 - pi1) ** 2
        exm += l2 * f2
        delta += p_a * max(f1, f2)
    return (x - pi1, z, delta, exm - pi2)


if __name__ == "__main__":
    d, n_max, pi1, theta = int(sys.argv[1]), int(sys.argv[2]), float(sys.argv[3]), float(sys.argv[4])
    print("level,x,z,delta,e_x_minus")
    for n in range(n_max + 1):
        print(n, *("%.17g" % v for v in moments(d, n, pi1, theta)), sep=",")
