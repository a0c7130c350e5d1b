"""Socket mode: environment workers in separate processes talking TCP.

Run a worker by hand with::

    python -m afc.orchestrator.remote --connect 127.0.0.1:5555 --cfd-id 0 --config run.yaml

``STATE`` and ``EPISODE_END`` payloads carry, after the observation (STATE
only), ``[R_i, r_i, n]`` followed by the ``n`` force-record samples as
``t[n] + C_l[n] + C_d[n]``.
"""
from __future__ import annotations

import argparse
import logging
import socket
import subprocess
import sys
from pathlib import Path

import numpy as np

from afc.envs.base import ForceRecord
from afc.errors import ProtocolError, WorkerError
from afc.orchestrator.config import RunConfig, dump_config, load_config
from afc.orchestrator.protocol import (
    PROTOCOL_VERSION, Channel, FrameReader, MessageType, WireMessage, encode_message,
)
from afc.orchestrator.rollout import RolloutWorker, StepOutcome, make_env

log = logging.getLogger(__name__)


def _pack_outcome(obs, reward, local, rec: ForceRecord):
    head = [] if obs is None else list(obs)
    return np.concatenate([head, [reward, local, rec.t.size], rec.t, rec.C_l, rec.C_d])


def _unpack_outcome(payload, obs_size):
    obs = payload[:obs_size] if obs_size else None
    rest = payload[obs_size:]
    reward, local, n = rest[0], rest[1], int(rest[2])
    body = rest[3:]
    if body.size != 3 * n:
        raise ProtocolError(f"force record of {body.size} values, expected {3 * n}")
    return obs, reward, local, ForceRecord(body[:n].copy(), body[n:2 * n].copy(), body[2 * n:].copy())


class Connection:
    def __init__(self, sock: socket.socket, timeout=None):
        self.sock = sock
        self.sock.settimeout(timeout)
        self.reader = FrameReader()
        self.queue = []

    def send(self, msg: WireMessage):
        self.sock.sendall(encode_message(msg))

    def recv(self) -> WireMessage:
        while not self.queue:
            data = self.sock.recv(1 << 16)
            if not data:
                raise ConnectionError("peer closed the connection")
            self.queue.extend(self.reader.feed(data))
        return self.queue.pop(0)

    def close(self):
        try:
            self.sock.close()
        except OSError:
            pass


# -- worker process side ------------------------------------------------------------

def serve_worker(host, port, cfd_id, cfg: RunConfig):
    env = make_env(cfg)
    worker = RolloutWorker(cfd_id, env, cfg.reward)
    conn = Connection(socket.create_connection((host, port)))
    conn.send(WireMessage(MessageType.HELLO, cfd_id, -1, 0,
                          [PROTOCOL_VERSION, env.obs_size, 1, env.n_marl]))
    actions = {}
    step = 0
    try:
        while True:
            msg = conn.recv()
            if msg.type == MessageType.SHUTDOWN:
                return
            if msg.type == MessageType.HELLO:
                if int(msg.payload[0]) != PROTOCOL_VERSION:
                    raise ProtocolError(f"protocol version {msg.payload[0]} not supported")
                obs = worker.reset(int(msg.payload[1]))
                step = 0
                actions = {}
                for m, o in enumerate(obs):
                    conn.send(WireMessage(MessageType.STATE, cfd_id, m, 0, o))
            elif msg.type == MessageType.ACTION:
                if msg.step != step:
                    raise ProtocolError(f"action for step {msg.step} while at step {step}")
                actions[msg.marl_id] = float(msg.payload[0])
                if len(actions) < env.n_marl:
                    continue
                out = worker.step([actions[m] for m in range(env.n_marl)])
                actions = {}
                step += 1
                for m in range(env.n_marl):
                    if out.done:
                        payload = _pack_outcome(None, out.rewards[m], out.local_rewards[m], out.records[m])
                        conn.send(WireMessage(MessageType.EPISODE_END, cfd_id, m, step, payload))
                    else:
                        payload = _pack_outcome(out.observations[m], out.rewards[m],
                                                out.local_rewards[m], out.records[m])
                        conn.send(WireMessage(MessageType.STATE, cfd_id, m, step, payload))
            else:
                raise ProtocolError(f"worker cannot handle {msg.type.name}")
    finally:
        conn.close()


# -- coordinator side ----------------------------------------------------------------

class RemoteWorker:
    """Coordinator-side proxy with the RolloutWorker split-phase interface."""

    def __init__(self, cfd_id, conn: Connection, n_marl, obs_size, n_actions, process=None):
        self.cfd_id = cfd_id
        self.conn = conn
        self.n_marl = n_marl
        self.obs_size = obs_size
        self.n_actions = n_actions
        self.process = process
        self.channels = [Channel(cfd_id, m) for m in range(n_marl)]
        self.last_step = -1
        self._phase = None

    def _recv(self):
        try:
            msg = self.conn.recv()
        except (OSError, ConnectionError) as exc:
            raise WorkerError(self.cfd_id, self.last_step, exc) from exc
        if msg.cfd_id != self.cfd_id or not 0 <= msg.marl_id < self.n_marl:
            raise ProtocolError(f"message for ({msg.cfd_id}, {msg.marl_id}) on worker {self.cfd_id}")
        return msg

    def submit_reset(self, seed):
        for ch in self.channels:
            ch.reset()
        self.conn.send(WireMessage(MessageType.HELLO, self.cfd_id, -1, 0, [PROTOCOL_VERSION, seed]))
        self._phase = "reset"

    def submit_actions(self, actions):
        for m, a in enumerate(actions):
            ch = self.channels[m]
            step = ch.step
            ch.on_action(step)
            self.conn.send(WireMessage(MessageType.ACTION, self.cfd_id, m, step, [a]))
        self._phase = "step"

    def collect(self):
        if self._phase == "reset":
            obs = [None] * self.n_marl
            for _ in range(self.n_marl):
                msg = self._recv()
                if msg.type != MessageType.STATE:
                    raise ProtocolError(f"expected state after reset, got {msg.type.name}")
                self.channels[msg.marl_id].on_state(msg.step)
                obs[msg.marl_id] = msg.payload
            self.last_step = 0
            return obs
        obs = [None] * self.n_marl
        rewards = np.zeros(self.n_marl)
        local = np.zeros(self.n_marl)
        recs = [None] * self.n_marl
        done = False
        for _ in range(self.n_marl):
            msg = self._recv()
            ch = self.channels[msg.marl_id]
            if msg.type == MessageType.STATE:
                ch.on_next("state", msg.step, self.n_actions)
                o, r, lr, rec = _unpack_outcome(msg.payload, self.obs_size)
                obs[msg.marl_id] = o
            elif msg.type == MessageType.EPISODE_END:
                ch.on_next("end", msg.step, self.n_actions)
                _, r, lr, rec = _unpack_outcome(msg.payload, 0)
                done = True
            else:
                raise ProtocolError(f"unexpected {msg.type.name} from worker {self.cfd_id}")
            rewards[msg.marl_id], local[msg.marl_id], recs[msg.marl_id] = r, lr, rec
        self.last_step += 1
        if done:
            obs = [np.zeros(self.obs_size) for _ in range(self.n_marl)]
        return StepOutcome(obs, rewards, local, recs, done)

    def close(self):
        try:
            self.conn.send(WireMessage(MessageType.SHUTDOWN, self.cfd_id, -1, 0))
        except OSError:
            pass
        self.conn.close()
        if self.process is not None:
            try:
                self.process.wait(timeout=30)
            except subprocess.TimeoutExpired:
                self.process.kill()


def spawn_workers(cfg: RunConfig, workdir, host="127.0.0.1"):
    """Start ``n_cfd`` worker processes and return connected proxies ordered by cfd_id."""
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    cfg_path = workdir / "worker_config.yaml"
    dump_config(cfg, cfg_path)
    server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    server.bind((host, 0))
    server.listen(cfg.n_cfd)
    server.settimeout(cfg.worker_timeout)
    port = server.getsockname()[1]
    procs = {}
    for k in range(cfg.n_cfd):
        procs[k] = subprocess.Popen([
            sys.executable, "-m", "afc.orchestrator.remote",
            "--connect", f"{host}:{port}", "--cfd-id", str(k), "--config", str(cfg_path),
        ])
    workers = {}
    try:
        for _ in range(cfg.n_cfd):
            sock, _ = server.accept()
            conn = Connection(sock, cfg.worker_timeout)
            hello = conn.recv()
            if hello.type != MessageType.HELLO or int(hello.payload[0]) != PROTOCOL_VERSION:
                raise ProtocolError("worker handshake failed")
            _, obs_size, _, n_marl = (int(x) for x in hello.payload)
            workers[hello.cfd_id] = RemoteWorker(hello.cfd_id, conn, n_marl, obs_size,
                                                 cfg.episode.n_actions, procs[hello.cfd_id])
    except Exception:
        for p in procs.values():
            p.kill()
        raise
    finally:
        server.close()
    return [workers[k] for k in sorted(workers)]


def main(argv=None):
    ap = argparse.ArgumentParser(description="afc environment worker (socket mode)")
    ap.add_argument("--connect", required=True, help="host:port of the coordinator")
    ap.add_argument("--cfd-id", type=int, required=True)
    ap.add_argument("--config", required=True)
    args = ap.parse_args(argv)
    host, _, port = args.connect.rpartition(":")
    serve_worker(host, int(port), args.cfd_id, load_config(args.config))


if __name__ == "__main__":
    main()
