"""Ground-code measurement-based quantum wire on spin-1 chains."""
