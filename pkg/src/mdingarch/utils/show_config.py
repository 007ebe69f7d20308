#!/usr/bin/env python3
"""
Show current configuration for mdingarch
"""

from mdingarch.core.config import (
    ENV_LOG_LEVEL,
    ENV_LOGS_PATH,
    ENV_OUTPUT_PATH,
    ENV_SEED,
    ENV_THREADS,
    config,
)


def main(create: bool = False) -> int:
    print("=== mdingarch Configuration ===\n")

    config_info = config.get_config_info()

    print("📁 Current Paths:")
    print(f"  Output Directory: {config_info['output_directory']}")
    print(f"  Logs Directory: {config_info['logs_directory']}")
    print()

    print("🔧 Environment Variables:")
    for var, value in config_info['environment_variables'].items():
        print(f"  {var}: {value}")
    print()

    print("⚙️  Runtime:")
    print(f"  Worker threads: {config_info['threads']}")
    seed = config_info['seed']
    print(f"  Seed fallback: {seed if seed is not None else 'fresh entropy per run'}")
    print(f"  Log level: {config_info['log_level']}")
    print()

    print("📊 Directory Status:")
    for name, path in [
        ("Output", config.output_directory),
        ("Logs", config.logs_directory),
    ]:
        exists = "✅ Exists" if path.exists() else "❌ Missing"
        print(f"  {name}: {exists}")
    print()

    print("🔄 Configuration Options:")
    print(f"  Default seed: export {ENV_SEED}=12345")
    print(f"  Worker cap: export {ENV_THREADS}=4")
    print(f"  Output directory: export {ENV_OUTPUT_PATH}='/path/to/reports'")
    print(f"  Logs directory: export {ENV_LOGS_PATH}='/path/to/logs'")
    print(f"  Log level: export {ENV_LOG_LEVEL}=INFO")
    print("  Values may also be placed in a .env file in the working directory.")

    if create:
        try:
            config.ensure_directories()
            print("\n✅ All directories created successfully!")
        except OSError as e:
            print(f"\n❌ Error creating directories: {e}")
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
