"""Small builders shared by the test modules."""
from rplsim.attacker import AttackerNode, AttackParams
from rplsim.engine import NodeParams, RadioParams, Simulator, Trace, seconds
from rplsim.rpl import RplNode, RplParams


def make_sim(topo, seed=1, params=None, attacker=None, attack=None, threshold=None,
             radio=None, node_params=None, trace=False):
    sim = Simulator(topo, seed, radio or RadioParams(), node_params or NodeParams(),
                    Trace() if trace else None)
    params = params or RplParams()
    for nid in topo.node_ids:
        if nid == attacker:
            node = AttackerNode(nid, sim, attack or AttackParams(), params,
                                defense_threshold=threshold)
        else:
            node = RplNode(nid, sim, params, defense_threshold=threshold)
        sim.add_node(node)
    return sim


def quiet(**kw):
    """Protocol parameters with application traffic off."""
    return RplParams(app_enabled=False, **kw)


def run(sim, s):
    return sim.run_until(seconds(s))


class Recorder:
    """Observer that records the whole node state after every event."""

    def __init__(self, sim):
        self.violations = []
        sim.observers.append(self)

    def __call__(self, sim, ev):
        nodes = sim.nodes
        for nid, n in nodes.items():
            if n.is_root or not n.joined:
                continue
            p = nodes[n.parent]
            if not p.joined or not n.rank > p.rank:
                self.violations.append(("rank", sim.now, nid))
            # parent pointers must lead to the root without revisiting a node
            seen, cur = {nid}, n.parent
            while not nodes[cur].is_root:
                if cur in seen or nodes[cur].parent is None:
                    self.violations.append(("loop", sim.now, nid))
                    break
                seen.add(cur)
                cur = nodes[cur].parent


class ListOracle:
    """Decision table over plain lists with linear scans; shares no code
    with the package implementation."""

    def __init__(self, threshold):
        self.threshold = threshold
        self.rows = []  # [sender, global, count]
        self.black = []

    def receive(self, sender, prefix, sender_global):
        for b in self.black:
            if b == sender:
                return "discard"
        row = None
        for r in self.rows:
            if r[0] == sender:
                row = r
        new = row is None
        if new:
            row = [sender, sender_global, 0]
            self.rows.append(row)
        if prefix == row[1]:
            if row[2] < self.threshold:
                row[2] += 1
                out = "forward_and_count"
            else:
                self.black.append(sender)
                out = "blacklist_and_discard"
        else:
            out = "forward_only"
        return "admit_new" if new else out
