"""
Prediction-set constructors for missing outcomes.

The method objects in methods.py and the MethodFactory are the entry points used
by the controllers and the simulation lab; the constructor functions can also be
called directly.
"""
