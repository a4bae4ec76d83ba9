"""Command objects for the predict, simulate and diagnose subcommands."""
