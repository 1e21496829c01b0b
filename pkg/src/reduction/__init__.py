"""Two-ball reduction and the certification bounds."""
