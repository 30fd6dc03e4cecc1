"""Monte Carlo experiments: tail, gap, condition-number, small-ball and dominance checks."""
