"""Experiment driver: configuration, execution and report files."""
