from .config_parser import ConfigParser, ExperimentConfig
