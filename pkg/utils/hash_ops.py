import hashlib
from pathlib import Path

CHUNK_SIZE = 1 << 16


def file_sha256(path):
    """
    Hash a file's bytes.
    :param path: file path
    :return: hex digest
    """
    digest = hashlib.sha256()
    with Path(path).open('rb') as handle:
        for chunk in iter(lambda: handle.read(CHUNK_SIZE), b''):
            digest.update(chunk)
    return digest.hexdigest()


def row_hash(app_id, label_code, text):
    """
    Short content hash of one labelled row, used by the split manifest.
    """
    payload = f"{app_id}\t{label_code}\t{text}".encode('utf-8')
    return hashlib.sha1(payload).hexdigest()[:16]
