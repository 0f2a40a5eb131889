from edgescan.cli import entrypoint

entrypoint()
