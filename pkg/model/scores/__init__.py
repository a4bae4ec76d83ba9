"""Conformity scores and the least-squares mean model behind the residual score."""
