import os

PROJECT_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", ".."))
CONFIGS_DIR = os.path.join(PROJECT_DIR, "configs")
DEFAULT_PARAMETERS_CONFIG_PATH = os.path.join(CONFIGS_DIR, "default_parameters.yaml")
TRACE_SCHEMA_PATH = os.path.join(CONFIGS_DIR, "trace_schema.json")
CORPUS_MANIFEST_PATH = os.path.join(CONFIGS_DIR, "corpus_manifest.json")

CONFIG_ENV_VAR = "MEMSECONV_CONFIG"
