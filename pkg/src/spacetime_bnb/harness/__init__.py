"""Experiment harness: manufactured problems, drivers, configuration and CLI."""
from .catalog import ManufacturedProblem, ProblemInstance, catalog, get_problem, instantiate, residual_check
from .config import ConfigError, ExperimentConfig, default_config, load_config
from .experiments import (InvariantFailure, Table, run_bnb_scan, run_catalog, run_cfl_scan, run_convergence,
                          run_experiment, run_gram_check, run_quasi_optimality, run_solve, solve_instance)
from .io import write_table

__all__ = ["ManufacturedProblem", "ProblemInstance", "catalog", "get_problem", "instantiate", "residual_check",
           "ConfigError", "ExperimentConfig", "default_config", "load_config", "InvariantFailure", "Table",
           "run_bnb_scan", "run_catalog", "run_cfl_scan", "run_convergence", "run_experiment", "run_gram_check",
           "run_quasi_optimality", "run_solve", "solve_instance", "write_table"]
