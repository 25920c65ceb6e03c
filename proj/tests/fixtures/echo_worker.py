# Copyright 2026 The tsenas Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Stub trainer worker for protocol tests.

Answers every evaluate request with fitness 0.5 and no blob updates, and
every train_supernet request with one small blob per position key. A request
whose dataset is "fail" gets an error reply. ECHO_MODE=garbage replies with
a non-JSON line; ECHO_MODE=exit quits on the first request.
"""

import base64
import json
import os
import sys


def reply(message):
    sys.stdout.write(json.dumps(message) + "\n")
    sys.stdout.flush()


def main():
    mode = os.environ.get("ECHO_MODE", "")
    for line in sys.stdin:
        if not line.strip():
            continue
        if mode == "exit":
            return 0
        if mode == "garbage":
            sys.stdout.write("this is not json\n")
            sys.stdout.flush()
            continue
        try:
            request = json.loads(line)
        except ValueError as err:
            reply({"id": 0, "error": "bad request: %s" % err})
            continue
        rid = request.get("id", 0)
        if request.get("dataset") == "fail":
            reply({"id": rid, "error": "stub failure for request %d" % rid})
            continue
        blobs = []
        if request.get("kind") == "train_supernet":
            for key in request.get("keys", []):
                payload = ("weights:" + key).encode()
                blobs.append([key, base64.b64encode(payload).decode()])
        reply({"id": rid, "fitness": 0.5, "param_count": 1000,
               "blob_updates": blobs})
    return 0


if __name__ == "__main__":
    sys.exit(main())
