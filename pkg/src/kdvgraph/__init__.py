"""Star-graph linear KdV: vertex matrices, forcing operators, simulator."""
