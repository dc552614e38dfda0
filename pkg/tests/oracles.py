"""Independent oracles shared by the unit and acceptance tests."""

import random

from pitc.events import sos_steps, term_to_pes
from pitc.semantics import forward_transitions, initial_config, prob_transitions
from pitc.syntax import free_names


def norm_label(lab):
    # bound-output placeholders are compared up to renaming
    return tuple(sorted((a.kind, a.subj, "*" if a.kind == "bout" else a.obj) for a in lab))


def sos_initial_labels(p):
    c = initial_config(p)
    base = free_names(p)
    return {norm_label(lab) for o in prob_transitions(c)
            for lab, _ in forward_transitions(o.target, None, base)}


def pes_initial_labels(p, pes=None):
    pes = pes or term_to_pes(p)
    return {norm_label([pes.label_in(e, frozenset()) for e in x]) for x in sos_steps(pes)}


def random_walk(rng: random.Random, p, steps, m=None):
    """Alternate probabilistic resolution and forward steps; returns the visited configs."""
    c = initial_config(p)
    seen = [c]
    for _ in range(steps):
        c = rng.choice(prob_transitions(c)).target
        seen.append(c)
        fw = forward_transitions(c, m)
        if not fw:
            break
        c = rng.choice(fw)[1]
        seen.append(c)
    return seen
