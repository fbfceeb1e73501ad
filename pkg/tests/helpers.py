"""Independent reference implementations used to cross-check the package.

Everything here is deliberately naive: python BFS over adjacency lists and
coordinate arithmetic written from the definitions, sharing no code path with
the union-find kernels it validates.
"""

from collections import deque


def adjacency(box, open_mask):
    adj = {v: [] for v in range(box.vertex_count)}
    for e in range(box.edge_count):
        if open_mask[e]:
            a, b, _ = box.edge_info(e)
            ia, ib = box.vertex_id(*a), box.vertex_id(*b)
            adj[ia].append(ib)
            adj[ib].append(ia)
    return adj


def bfs_component(box, open_mask, start):
    adj = adjacency(box, open_mask)
    seen = {start}
    dq = deque([start])
    while dq:
        x = dq.popleft()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                dq.append(y)
    return seen


def bfs_reaches(box, open_mask, sources, targets):
    targets = set(int(t) for t in targets)
    adj = adjacency(box, open_mask)
    seen = set(int(s) for s in sources)
    if seen & targets:
        return True
    dq = deque(seen)
    while dq:
        x = dq.popleft()
        for y in adj[x]:
            if y not in seen:
                if y in targets:
                    return True
                seen.add(y)
                dq.append(y)
    return False


def bfs_origin_to_ring(box, open_mask, radius):
    """Origin-to-boundary by literal coordinate scan plus BFS."""
    ring = [
        v for v in range(box.vertex_count)
        if max(abs(box.vertex_coord(v)[0]), abs(box.vertex_coord(v)[1])) == radius
    ]
    return bfs_reaches(box, open_mask, [box.vertex_id(0, 0, 0)], ring)


def enumerate_l1_edges(k, x0, x1, y0, y1):
    """All nearest-neighbour pairs inside the box, from the metric definition."""
    verts = {
        (x, y, z)
        for z in range(k + 1)
        for y in range(y0, y1 + 1)
        for x in range(x0, x1 + 1)
    }
    edges = set()
    for (x, y, z) in verts:
        for d in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
            w = (x + d[0], y + d[1], z + d[2])
            if w in verts:
                edges.add(((x, y, z), w))
    return verts, edges


def random_mask(rng, box, density):
    return rng.random(box.edge_count) < density
