"""Build the default 4x4 grid and look at its radio graph.

The root sits in a corner, so hop depth grows toward the far corner.
Node 15 is the deepest node and the default attacker position.
"""
from rplsim.topology import build_chain, build_grid, neighbors

grid = build_grid(4, 4, spacing=20.0, tx_range=30.0)
print("nodes:", grid.node_ids)
print("neighbors of 5:", sorted(neighbors(grid, 5)))

depths = grid.hop_depths()
for r in range(4):
    print(" ".join(str(depths[r * 4 + c]) for c in range(4)))
print("edge node:", grid.edge_node())

# a chain puts node i exactly i hops from the root
chain = build_chain(5, spacing=10.0)
print("chain depths:", chain.hop_depths())
