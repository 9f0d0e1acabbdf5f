"""Coding lengths: the currency every model-selection criterion pays in.

A model choice among N equally likely options costs ln N nats.  This demo
walks the combinatorial primitives and shows the nats/bits boundary.
"""

import math

from modl import coding

print("Choosing 1 of 8 options costs", coding.nats_to_bits(math.log(8)), "bits")

print("\nln n! via the cached table:")
for n in (4, 10, 100, 10_000):
    print(f"  ln {n}! = {coding.log_factorial(n):.6f} nats")

print("\nln C(n, k) is symmetric and exact for small sides:")
print("  ln C(10, 3)      =", coding.log_binomial(10, 3), "= ln 120 =", math.log(120))
print("  ln C(10, 7)      =", coding.log_binomial(10, 7))
print("  ln C(10^6, 3)    =", coding.log_binomial(10**6, 3))

print("\nMultinomial label-sequence cost inside one part:")
print("  counts [2, 2] ->", coding.log_multinomial([2, 2]), "= ln 6")
print("  counts [4, 0] ->", coding.log_multinomial([4, 0]), "(pure part is free)")

print("\nPartitions of V values into at most K groups, ln B(V, K):")
for v, k in ((3, 2), (4, 4), (8, 8)):
    print(f"  ln B({v}, {k}) = {coding.log_partition_count(v, k):.6f}"
          f"  (B = {round(math.exp(coding.log_partition_count(v, k)))})")
print("B(4, 4) = 15 is the Bell number of 4; B(V, K) grows with K, which is")
print("exactly why adding groups must buy likelihood to pay for itself.")
