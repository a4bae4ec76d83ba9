"""Run configuration, the pipelines behind each subcommand and the command invoker."""
