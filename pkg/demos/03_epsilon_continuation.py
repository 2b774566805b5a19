"""The epsilon-continuation scheme on a double-phase problem.

The flux a(x, Du) = (1+|Du|^2)^((p-2)/2) Du + a(x) (1+|Du|^2)^((q-2)/2) Du
with a Lipschitz weight a(x) = x1 has (p, q)-growth with p = 2, q = 2.2.
Adding eps (1+|Du|^2)^((q+eps-2)/2) Du restores standard (q+eps)-growth;
we solve down a geometric eps schedule, warm-starting each Newton solve
from the previous solution, and track the quantities whose eps-uniform
boundedness drives the limit passage.
"""

import numpy as np

import pqelliptic as pq

op = pq.make_family("double-phase",
                    {"p": 2, "q": 2.2,
                     "weight": lambda x: np.asarray(x)[..., 0]})


def b(x):
    return np.full(np.shape(x)[:-1], -2.0)


mesh = pq.build_mesh(2, pq.unit_box(2), 65)
schedule = pq.EpsilonSchedule(eps0=0.2, ratio=0.5, steps=5)
trace = pq.continuation_solve(mesh, op, b, schedule)

print(f"{'eps':>8} {'newton':>6} {'|Du|_Lp':>10} {'|u|_inf':>9} "
      f"{'|Du|_inf':>9} {'|D2u|_L2':>9} {'increment':>11}")
for s in trace.steps:
    inc = f"{s.cauchy_increment:.3e}" if s.cauchy_increment else "-"
    print(f"{s.eps:>8.4f} {s.stats.iterations:>6} {s.lp_gradient:>10.6f} "
          f"{s.linf_u_interior:>9.4f} {s.linf_gradient_interior:>9.4f} "
          f"{s.h2_interior:>9.4f} {inc:>11}")

uni = pq.check_uniform_lp(trace, bound=1.5)
print(f"\nGlobal L^p gradient norms stay within a factor {uni.ratio:.4f}")
print("of each other across eps (the theory guarantees an eps-independent")
print("bound; 1.5 is the declared acceptance band).")

incs = trace.increments()
print(f"\nW^{{1,2}} Cauchy increments contract by "
      f"{np.mean([b/a for a, b in zip(incs, incs[1:])]):.2f} per step,")
print("tracking the schedule ratio: the discrete surrogate of the strong")
print("W^{1,2}_loc convergence used in the limit passage.")

diff = pq.w12_distance(trace.final_field, trace.extrapolated_field)
print(f"\nField at the smallest eps vs Richardson extrapolation: "
      f"{diff:.3e} apart in W^(1,2);")
print("both are emitted, no claim which is 'the' limit.")
