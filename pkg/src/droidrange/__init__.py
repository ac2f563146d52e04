"""DroidRange: a control plane for containerized Android cyber-range labs.

The package compiles declarative lab scenarios into compose topologies and
provides live device control: an ADB wire client, an emulator console
client, a WebSocket-to-TCP screen bridge, a TCP port forwarder, and an HTTP
API tying those together for browser UIs and third-party tooling.
"""

__version__ = "0.1.0"
