"""
This module defines a factory for creating conformal method objects.

The MethodFactory class maps the method keys used on the command line and in
simulation configs (per-feature, simultaneous, pro-cp, pro-cp2, weighted,
mcar-pac, mar-pac-small) to ConformalMethod instances.
"""

from model.conformal.methods import (
    MarPacSmallMethod,
    McarPacMethod,
    PerFeatureMethod,
    ProCP2Method,
    ProCPMethod,
    SimultaneousMethod,
    WeightedMethod,
)

METHODS = {
    method.name: method
    for method in (
        PerFeatureMethod,
        SimultaneousMethod,
        ProCPMethod,
        ProCP2Method,
        WeightedMethod,
        McarPacMethod,
        MarPacSmallMethod,
    )
}

PROPENSITY_METHODS = frozenset({"pro-cp", "pro-cp2", "weighted"})


class MethodFactory:
    """
    A factory class for creating conformal method objects by name.
    """

    @staticmethod
    def method_names():
        """Returns the supported method keys in a stable order."""
        return list(METHODS)

    @staticmethod
    def create_method(method_name):
        """
        Creates and returns an instance of a conformal method class.

        Parameters:
            method_name (str): One of the keys returned by method_names().

        Returns:
            ConformalMethod: A fresh method object.

        Raises:
            ValueError: If an unknown method name is specified.
        """
        try:
            return METHODS[method_name]()
        except KeyError:
            raise ValueError(f"Unknown conformal method: {method_name}") from None
