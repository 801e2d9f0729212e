"""Experiment harness, reports and figures."""
