# ============================*
 # ** Copyright UCAR (c) 2020
 # ** University Corporation for Atmospheric Research (UCAR)
 # ** National Center for Atmospheric Research (NCAR)
 # ** Research Applications Lab (RAL)
 # ** P.O.Box 3000, Boulder, Colorado, 80307-3000, USA
 # ============================*



"""
Program Name: read_env_vars_in_config.py

Loads run configurations (YAML, or JSON which YAML reads natively) and
expands environment variables in values tagged with !ENV, e.g.

    basis_size: 1200
    cache_dir: !ENV '${OSCITRACE_HOME:-/tmp}/cache'

An unset variable without a default is left as its bare name, so a missing
variable shows up in the parsed value instead of silently becoming empty.
"""
import os
import re

import yaml

ENV_PATTERN = re.compile(r'\$\{(\w+)(?::-([^}]*))?\}')


def expand_env(value):
    """Replaces every ${VAR} or ${VAR:-default} occurrence in value"""

    def _lookup(match):
        name, default = match.group(1), match.group(2)
        if name in os.environ:
            return os.environ[name]
        return default if default is not None else name

    return ENV_PATTERN.sub(_lookup, value)


def _make_loader(tag):
    """A fresh SafeLoader subclass carrying the env resolver for tag"""

    class EnvLoader(yaml.SafeLoader):
        pass

    EnvLoader.add_implicit_resolver(tag, re.compile(r'.*\$\{\w+(?::-[^}]*)?\}.*'), None)
    EnvLoader.add_constructor(tag, lambda loader, node: expand_env(loader.construct_scalar(node)))
    return EnvLoader


def parse_config(path=None, data=None, tag='!ENV'):
    """
    Load a configuration file and resolve any environment variables.

    :param str path: the path to the yaml/json file
    :param str data: the yaml data itself as a stream or string
    :param str tag: the tag that marks values to expand
    :return: the parsed mapping
    """
    loader = _make_loader(tag)
    if path:
        with open(path) as conf_data:
            return yaml.load(conf_data, Loader=loader)
    if data:
        return yaml.load(data, Loader=loader)
    raise ValueError('Either a path or data should be defined as input')
