"""Experiment registry, config loading and the ``lab`` command line."""
