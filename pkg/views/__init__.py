"""Console tables and text renderers for run outputs."""
