from dataclasses import dataclass

TOL = 1e-12


@dataclass(frozen=True)
class PruneStep:
    """A subtree of the maximal tree, given by the internal nodes turned into leaves"""
    alpha: float
    pruned: frozenset
    n_leaves: int
    cost: float             # resubstitution cost R(T) / N

    def to_dict(self):
        return {"alpha": self.alpha, "n_leaves": self.n_leaves, "cost": self.cost,
                "pruned": sorted(self.pruned)}


def _subtree(node, pruned, N):
    """(R(T_t), leaves of T_t) under the current pruning"""
    if node.is_leaf or node.node_id in pruned:
        return node.leaf_cost / N, 1
    rl, ll = _subtree(node.left, pruned, N)
    rr, lr = _subtree(node.right, pruned, N)
    return rl + rr, ll + lr


def _postorder(node, pruned):
    if node.is_leaf or node.node_id in pruned:
        return []
    return _postorder(node.left, pruned) + _postorder(node.right, pruned) + [node]


def prune_sequence(tree):
    """
    Weakest-link pruning. The first subtree collapses every split that does not
    lower the resubstitution cost; each following subtree removes the branches
    with the smallest g(t) = (R(t) - R(T_t)) / (|T_t| - 1), down to the root.
    """
    N = tree.n_samples
    pruned = set()
    for node in _postorder(tree.root, pruned):
        r_sub, _ = _subtree(node, pruned, N)
        if node.leaf_cost / N <= r_sub + TOL * node.leaf_cost / N:
            pruned.add(node.node_id)

    cost, leaves = _subtree(tree.root, pruned, N)
    steps = [PruneStep(0.0, frozenset(pruned), leaves, cost)]
    while tree.root.node_id not in pruned and not tree.root.is_leaf:
        g = {}
        for node in _postorder(tree.root, pruned):
            r_sub, n_leaves = _subtree(node, pruned, N)
            g[node.node_id] = (node.leaf_cost / N - r_sub) / (n_leaves - 1)
        alpha = min(g.values())
        pruned |= {nid for nid, v in g.items() if v <= alpha + TOL * abs(alpha)}
        cost, leaves = _subtree(tree.root, pruned, N)
        if alpha <= steps[-1].alpha:
            # Rounding left a zero-gain branch; merge it into the previous subtree
            steps[-1] = PruneStep(steps[-1].alpha, frozenset(pruned), leaves, cost)
        else:
            steps.append(PruneStep(alpha, frozenset(pruned), leaves, cost))
    return steps


def step_for_alpha(steps, alpha):
    """Index of the smallest subtree whose critical alpha does not exceed alpha"""
    k = 0
    for i, s in enumerate(steps):
        if s.alpha <= alpha + TOL * abs(alpha):
            k = i
    return k


def cost_complexity(step, alpha):
    return step.cost + alpha * step.n_leaves
