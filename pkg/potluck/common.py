#!/usr/bin/env python3
"""
Shared helpers: logging setup, the LoggerSuperclass, type/dict assertions, the exception families and the
configuration loader.

author: Enoc Martínez
institution: Universitat Politècnica de Catalunya (UPC)
email: enoc.martinez@upc.edu
license: MIT
created: 3/10/26
"""

import copy
import os
import logging
from logging.handlers import TimedRotatingFileHandler

import jsonschema
import rich
import yaml

VERSION = "1.0.0"

# Color codes
GRN = "\x1B[32m"
YEL = "\x1B[33m"
RED = "\x1B[31m"
CYN = "\x1B[36m"
NRM = "\x1B[0m"
RST = "\033[0m"


# ---------------- Errors ---------------- #
class ValidationError(ValueError):
    """Invalid input value (simplex points, indices, series...)"""
    code = "validation_error"


class ConfigurationError(ValueError):
    """The requested computation can't be configured this way (grid too large, missing x0, bad step...)"""
    code = "configuration_error"


class ExprSyntaxError(SyntaxError):
    code = "syntax_error"

    def __init__(self, message: str, src: str = "", offset: int = 0, expected: list = []):
        self.src = src
        self.offset = offset
        self.expected = sorted(set(expected))
        if self.expected:
            message = f"{message} at offset {offset} (expected one of {', '.join(self.expected)})"
        else:
            message = f"{message} at offset {offset}"
        SyntaxError.__init__(self, message)


class EvaluationError(ArithmeticError):
    """Domain error while evaluating an expression: division by zero, log of non-positive, 0^negative..."""
    code = "evaluation_error"

    def __init__(self, message: str, subexpr: str = "", player: int = None, step: int = None):
        self.subexpr = subexpr
        self.player = player
        self.step = step
        self.reason = message
        ArithmeticError.__init__(self, self.describe())

    def describe(self) -> str:
        msg = self.reason
        if self.subexpr:
            msg += f" in '{self.subexpr}'"
        if self.player is not None:
            msg += f" (reward of player {self.player})"
        if self.step is not None:
            msg += f" at step {self.step}"
        return msg

    def attach(self, player: int = None, step: int = None):
        """Returns a copy of this error with player and/or step information attached"""
        return EvaluationError(self.reason, self.subexpr,
                               player=self.player if player is None else player,
                               step=self.step if step is None else step)


class SequenceExhaustedError(LookupError):
    code = "sequence_exhausted"


class WeightValidationError(ValueError):
    code = "weight_validation_error"

    def __init__(self, message, report: dict):
        self.report = report
        ValueError.__init__(self, message)


class NeedsFullTrajectoryError(ValueError):
    code = "needs_full_trajectory"


class SchemaValidationError(ValidationError):
    """Document not valid against its JSON schema"""
    code = "schema_error"


class DocumentFormatError(ValueError):
    """Unreadable input document (malformed JSON, bad sequence file...)"""
    code = "parse_error"


def error_code(e: Exception) -> str:
    """Machine-readable code for any exception"""
    if isinstance(e, jsonschema.ValidationError):
        return "schema_error"
    return getattr(e, "code", "runtime_error")


log_levels = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warning": logging.WARNING,
    "error": logging.ERROR,
}


def setup_log(name, path="log", log_level="debug"):
    """
    Configures the root logger: console handler (stderr) plus a daily rotating <path>/<name>.log if path is set
    :param name: log name
    :param path: log folder, empty string for console only
    :param log_level: one of debug, info, warning, error
    """
    if not name:
        raise ValueError(f"log name '{name}' not valid")
    if log_level not in log_levels.keys():
        raise ValueError(f"log level '{log_level}' not valid, expected one of {list(log_levels.keys())}")

    logger = logging.getLogger()
    logger.setLevel(log_levels[log_level])
    formatter = logging.Formatter('%(asctime)s.%(msecs)03d %(levelname)-7s: %(message)s', datefmt='%Y/%m/%d %H:%M:%S')
    # setup_log may be called more than once in the same process (tests, sweeps)
    for h in list(logger.handlers):
        logger.removeHandler(h)

    handlers = [logging.StreamHandler()]  # stderr, stdout is reserved for JSON answers
    if path:
        os.makedirs(path, exist_ok=True)
        logfile = os.path.join(path, name if name.endswith(".log") else name + ".log")
        handlers.append(TimedRotatingFileHandler(logfile, when="midnight", interval=1, backupCount=7))
    for h in handlers:
        h.setFormatter(formatter)
        logger.addHandler(h)

    logger.info(f"===== {name} =====")
    return logger


class LoggerSuperclass:
    def __init__(self, logger: logging.Logger, name: str, colour=NRM):
        """
        Mixin adding debug/info/warning/error methods that prefix every message with [name] in the given colour
        """
        self.__logger_name = name
        self.__logger = logger if logger else logging.getLogger()
        self.__log_colour = colour

    def __format(self, colour: str, *args) -> str:
        return f"{colour}[{self.__logger_name}] {' '.join(str(a) for a in args)}{RST}"

    def debug(self, *args):
        self.__logger.debug(self.__format(self.__log_colour, *args))

    def info(self, *args):
        self.__logger.info(self.__format(self.__log_colour, *args))

    def warning(self, *args):
        self.__logger.warning(self.__format(YEL, *args))

    def error(self, *args, exception=None):
        """Logs an error, then raises exception (a class gets the message, an instance is raised as is)"""
        self.__logger.error(self.__format(RED, *args))
        if isinstance(exception, BaseException):
            raise exception
        elif isinstance(exception, type) and issubclass(exception, BaseException):
            raise exception(f"[{self.__logger_name}] {' '.join(str(a) for a in args)}")

    def setLevel(self, level):
        self.__logger.setLevel(level)


def assert_type(obj, valid_type):
    """
    Asserts that obj is of type <valid_type>
    :param obj:  any object
    :param valid_type:  any type
    """
    assert isinstance(obj, valid_type), f"Expected {valid_type}, but got {type(obj)} instead"


def assert_dict(conf: dict, required_keys: dict, verbose=False):
    """
    Checks if all the expected keys in a dictionary are there. The expected format is field name as key and type as
    value:
        { "name": str, "importantNumber": int}

    One level of nesting is supported:
        { "someData/nestedData": str}
    expects something like
        {
        "someData": {
            "nestedData": "hi"
            }
        }

    A tuple of types is accepted as value, e.g. {"resolution": (int, float)}

    :param conf: dict with configuration to be checked
    :param required_keys: dictionary with required keys
    :raises: AssertionError if the input does not match required_keys
    """
    for key, expected_type in required_keys.items():
        if "/" in key:
            parent, son = key.split("/")
            if parent not in conf.keys():
                msg = f"Required key \"{parent}\" not found!"
                if verbose:
                    rich.print(f"[red]{msg}")
                raise AssertionError(msg)

            if type(conf[parent]) is not dict:
                msg = f"Value for key \"{parent}\" wrong type, expected type dict, but got {type(conf[parent])}"
                if verbose:
                    rich.print(f"[red]{msg}")
                raise AssertionError(msg)
            if son not in conf[parent].keys():
                msg = f"Required key \"{son}\" not found in configuration/{parent}"
                if verbose:
                    rich.print(f"[red]{msg}")
                raise AssertionError(msg)
            value = conf[parent][son]
        elif key not in conf.keys():
            raise AssertionError(f"Required key \"{key}\" not found in configuration")
        else:
            value = conf[key]

        if not isinstance(expected_type, tuple):
            expected_type = (expected_type,)
        # bool is an int subclass, don't let it through as a number
        if type(value) is bool and bool not in expected_type or not isinstance(value, expected_type):
            msg = f"Value for key \"{key}\" wrong type, expected type {expected_type}, but got '{type(value)}'"
            if verbose:
                rich.print(f"[red]{msg}")
            raise AssertionError(msg)


def validate_schema(doc: dict, schema: dict, errors: list, verbose=False) -> list:
    """
    Validates a document against a JSON schema, appending a message to errors for every failure
    """
    if "$id" not in schema.keys():
        raise ValueError("Schema not valid!! missing $id field")

    if verbose:
        rich.print(f"   Validating document against schema {schema['$id']}")

    validator = jsonschema.Draft7Validator(schema)
    for e in sorted(validator.iter_errors(doc), key=lambda err: list(err.path)):
        location = "/".join(str(p) for p in e.path) or "<root>"
        txt = f"Document not valid for schema '{schema['$id']}' at '{location}'. Cause: {e.message}"
        errors.append(txt)
        if verbose:
            rich.print(f"[red]{txt}")
    return errors


# ---------------- Configuration ---------------- #
default_config = {
    "log": {"path": "log", "level": "info"},
    "qstar": {"resolution": 1 / 200, "refine": 3},
    "potential": {"nodes": 1001, "h": 1e-5, "threshold": 1e-4, "samples": 50},
    "kronecker": {"eps": 1e-4, "length": 100000},
    "sweep": {"threads": 0},  # 0 means hardware count
}

__config_types = {
    "log/path": str,
    "log/level": str,
    "qstar/resolution": (int, float),
    "qstar/refine": int,
    "potential/nodes": int,
    "potential/h": (int, float),
    "potential/threshold": (int, float),
    "potential/samples": int,
    "kronecker/eps": (int, float),
    "kronecker/length": int,
    "sweep/threads": int,
}


def load_config(filename: str = "") -> dict:
    """
    Loads the configuration file (yaml with a top-level 'potluck' key) and merges it over the defaults. If the file
    does not exist, the defaults are returned.
    :param filename: yaml file
    :returns: configuration dict
    """
    conf = copy.deepcopy(default_config)
    if filename and os.path.exists(filename):
        with open(filename) as f:
            contents = yaml.safe_load(f) or {}
        if "potluck" not in contents.keys():
            raise ConfigurationError(f"Configuration file '{filename}' has no 'potluck' key")
        user_conf = contents["potluck"] or {}
        for section, values in user_conf.items():
            if section not in conf.keys():
                raise ConfigurationError(f"Unknown configuration section '{section}' in '{filename}'")
            conf[section].update(values or {})

    try:
        assert_dict(conf, __config_types)
    except AssertionError as e:
        raise ConfigurationError(str(e))

    threads = os.environ.get("POTLUCK_THREADS", "")
    if threads:
        try:
            conf["sweep"]["threads"] = int(threads)
        except ValueError:
            raise ConfigurationError(f"POTLUCK_THREADS should be an integer, got '{threads}'")
    if conf["sweep"]["threads"] < 1:
        conf["sweep"]["threads"] = os.cpu_count() or 1
    return conf
