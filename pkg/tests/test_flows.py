import random

import numpy as np

from dlab.flows import FlowNetwork, _dinic_kernel, dinic_pure


def _random_network(rng, n=30, m=90):
    net = FlowNetwork(n + 2)
    s, t = n, n + 1
    for _ in range(m):
        u = rng.randrange(n)
        v = rng.randrange(n)
        if u != v:
            net.add_undirected(u, v, rng.randint(1, 1 << 35))
    for _ in range(6):
        net.add_arc(s, rng.randrange(n), rng.randint(1, 1 << 35))
        net.add_arc(rng.randrange(n), t, rng.randint(1, 1 << 35))
    return net, s, t


def _arrays(net):
    n = net.n
    m = len(net._to)
    head = np.full(n, -1, dtype=np.int64)
    nxt = np.empty(m, dtype=np.int64)
    to = np.array(net._to, dtype=np.int64)
    cap = np.array(net._cap, dtype=np.int64)
    for e in range(m):
        nxt[e] = head[net._from[e]]
        head[net._from[e]] = e
    return head, nxt, to, cap


def test_known_small_cut():
    net = FlowNetwork(4)
    net.add_arc(0, 1, 5)
    net.add_arc(0, 2, 3)
    net.add_arc(1, 3, 4)
    net.add_arc(2, 3, 9)
    value, side, _ = net.solve(0, 3)
    assert value == 7
    assert side[0] and not side[3]


def test_jit_matches_pure_python():
    rng = random.Random(0)
    for _ in range(5):
        net, s, t = _random_network(rng)
        head, nxt, to, cap = _arrays(net)
        fast = int(_dinic_kernel(head.copy(), nxt, to, cap.copy(), net.n, s, t))
        slow = int(dinic_pure(head.copy(), nxt, to, cap.copy(), net.n, s, t))
        assert fast == slow


def test_min_cut_value_equals_cut_capacity():
    rng = random.Random(1)
    for _ in range(5):
        net, s, t = _random_network(rng, n=20, m=50)
        value, side, _ = net.solve(s, t)
        cut = 0
        for e in range(0, len(net._to), 2):
            u, v = net._from[e], net._to[e]
            c_uv, c_vu = net._cap[e], net._cap[e + 1]
            if side[u] and not side[v]:
                cut += c_uv
            elif side[v] and not side[u]:
                cut += c_vu
        assert cut == value
