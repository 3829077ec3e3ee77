"""Exact polynomial root isolation with continuous-amortization bound checking."""
