"""Frontier dynamic programming over edge configurations.

Vertices are introduced one at a time; the state is the partition of the
current frontier into open clusters, each block tagged with whether it
touches a source and/or a target vertex.  Blocks that leave the frontier
pick up their factor q, which makes the same sweep compute Bernoulli
connection probabilities (q = 1) and random-cluster partition functions.

Weights are either floats (fixed p), ``Fraction`` (exact p) or integer
polynomial coefficient arrays indexed by the number of open edges.
"""

from dataclasses import dataclass

import numpy as np

from .errors import CapacityExceeded

MAX_STATES = 2_000_000
_SRC, _TGT = 1, 2


@dataclass
class FrontierResult:
    event: object  # weight of configurations in which a source meets a target
    total: object  # total weight (1 for Bernoulli percolation)
    max_states: int

    @property
    def probability(self):
        return self.event / self.total


class _Poly:
    """Weight algebra on integer coefficient arrays (q must be an integer)."""

    def __init__(self, n_edges, q):
        self.n = n_edges + 1
        self.q = int(q)

    def one(self):
        w = np.zeros(self.n, dtype=object)
        w[0] = 1
        return w

    def zero(self):
        return np.zeros(self.n, dtype=object)

    def opened(self, w, k):
        out = np.zeros_like(w)
        out[1:] = w[:-1]
        return out

    def closed(self, w, k):
        return w

    def times_q(self, w, times):
        return w * (self.q**times) if times else w


class _Scalar:
    def __init__(self, p, q):
        self.p = p
        self.q = q

    def one(self):
        return 1

    def zero(self):
        return 0

    def opened(self, w, k):
        return w * self.p[k]

    def closed(self, w, k):
        return w * (1 - self.p[k])

    def times_q(self, w, times):
        return w * self.q**times if times else w


def _canon(labels, flags):
    remap = {}
    out = []
    for l in labels:
        if l not in remap:
            remap[l] = len(remap)
        out.append(remap[l])
    newflags = [0] * len(remap)
    for old, new in remap.items():
        newflags[new] = flags[old]
    return tuple(out), tuple(newflags)


def frontier_sum(n_vertices, edges, p=None, q=1, sources=(), targets=(), wired=False, order=None,
                 poly=False, max_states=MAX_STATES) -> FrontierResult:
    """Sum FK / Bernoulli weights with and without the event {source <-> target}.

    ``edges`` are pairs of vertex indices in ``range(n_vertices)``.  With
    ``wired`` all target vertices are joined to one permanent boundary block.
    ``p`` is a scalar or per-edge sequence (ignored when ``poly``).
    """
    edges = [tuple(map(int, e)) for e in edges]
    if poly:
        alg = _Poly(len(edges), q)
    else:
        pe = [p] * len(edges) if np.isscalar(p) or not hasattr(p, "__len__") else list(p)
        alg = _Scalar(pe, q)
    order = list(range(n_vertices)) if order is None else list(order)
    pos = {v: i for i, v in enumerate(order)}
    sources, targets = set(sources), set(targets)
    # edges attach to the later endpoint in the order
    attach = [[] for _ in order]
    last_use = {v: pos[v] for v in order}
    for k, (a, b) in enumerate(edges):
        late = a if pos[a] > pos[b] else b
        attach[pos[late]].append(k)
        last_use[a] = max(last_use[a], pos[late])
        last_use[b] = max(last_use[b], pos[late])
    leave_at = [[] for _ in order]
    for v, t in last_use.items():
        leave_at[t].append(v)

    frontier = []
    if wired:
        frontier.append(-1)  # permanent wired boundary block
        states = {((0,), (_TGT,), False): alg.one()}
    else:
        states = {((), (), False): alg.one()}
    # with q = 1 the partition no longer matters once the event is decided
    collapse = (q == 1)
    absorbed, dead = alg.zero(), alg.zero()
    sources_left = len(sources)
    peak = 1
    for step, v in enumerate(order):
        if v in sources:
            sources_left -= 1
        flag = (_SRC if v in sources else 0) | (_TGT if v in targets else 0)
        new = {}
        for (labels, flags, hit), w in states.items():
            lab = labels + (len(flags),)
            fl = list(flags) + [flag]
            if wired and v in targets:
                # join the boundary block
                b = labels[0]
                fl[b] |= flag
                lab = labels + (b,)
                fl.pop()
            key = _canon(lab, fl)
            got = hit or any(f == _SRC | _TGT for f in key[1])
            key = (key[0], key[1], got)
            new[key] = new[key] + w if key in new else w
        states = new
        frontier.append(v)
        fpos = {x: i for i, x in enumerate(frontier)}
        for k in attach[step]:
            a, b = edges[k]
            ia, ib = fpos[a], fpos[b]
            absorbed = alg.closed(absorbed, k) + alg.opened(absorbed, k)
            dead = alg.closed(dead, k) + alg.opened(dead, k)
            new = {}
            for (labels, flags, hit), w in states.items():
                wc = alg.closed(w, k)
                key = (labels, flags, hit)
                new[key] = new[key] + wc if key in new else wc
                la, lb = labels[ia], labels[ib]
                wo = alg.opened(w, k)
                if la == lb:
                    key = (labels, flags, hit)
                else:
                    lab = tuple(la if l == lb else l for l in labels)
                    fl = list(flags)
                    fl[la] |= fl[lb]
                    merged = fl[la]
                    lab, fl2 = _canon(lab, fl)
                    key = (lab, fl2, hit or merged == _SRC | _TGT)
                new[key] = new[key] + wo if key in new else wo
            states = new
        for x in leave_at[step]:
            ix = frontier.index(x)
            new = {}
            for (labels, flags, hit), w in states.items():
                l = labels[ix]
                lab = labels[:ix] + labels[ix + 1 :]
                if l not in lab:
                    w = alg.times_q(w, 1)
                key = _canon(lab, flags)
                key = (key[0], key[1], hit)
                new[key] = new[key] + w if key in new else w
            states = new
            frontier.pop(ix)
        if collapse:
            kept = {}
            for key, w in states.items():
                labels, flags, hit = key
                if hit:
                    absorbed = absorbed + w
                elif sources_left == 0 and not any(f & _SRC for f in flags):
                    dead = dead + w
                else:
                    kept[key] = w
            states = kept
        peak = max(peak, len(states))
        if len(states) > max_states:
            raise CapacityExceeded(f"frontier DP exceeded {max_states} states", dimension=len(states))
    event, total = absorbed, absorbed + dead
    for (labels, flags, hit), w in states.items():
        w = alg.times_q(w, len(flags))
        total = total + w
        if hit:
            event = event + w
    return FrontierResult(event=event, total=total, max_states=peak)
