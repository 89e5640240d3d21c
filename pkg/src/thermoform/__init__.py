"""Numerical thermodynamic formalism for transfer operators."""
