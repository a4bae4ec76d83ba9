"""
Core value types: masked datasets, weighted discrete distributions and their
quantiles, hypergeometric probabilities, guarantee levels, prediction rules and
the exception hierarchy.
"""
