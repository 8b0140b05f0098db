"""Content-addressed on-disk cache of computed JSON values.

Entries live at <cache_dir>/<key[:2]>/<key>.json as {"schema", "key", "value"}.
Writes go through a temporary file and os.replace so concurrent processes
never observe partial entries.
"""
import hashlib
import json
import logging
import os
import tempfile

logger = logging.getLogger(__name__)


def cache_key(operation, parameters):
    """sha256 of the canonical JSON of (operation, parameters)"""
    payload = json.dumps({'operation': operation, 'parameters': parameters},
                         sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()


class ExpansionCache:
    """JSON cache keyed by operation and parameters; disabled when cache_dir is None"""

    def __init__(self, cache_dir, schema_version=1):
        self.cache_dir = cache_dir
        self.schema_version = schema_version
        self.stats = {'hits': 0, 'misses': 0, 'computed': 0}

    @property
    def enabled(self):
        return bool(self.cache_dir)

    def path_for(self, key):
        return os.path.join(self.cache_dir, key[:2], f'{key}.json')

    def _read(self, key):
        path = self.path_for(key)
        if not os.path.exists(path):
            return None
        try:
            with open(path, 'r', encoding='utf-8') as handle:
                entry = json.load(handle)
        except (OSError, ValueError) as e:
            logger.warning('Corrupt cache entry %s (%s); recomputing', path, e)
            return None
        if not isinstance(entry, dict) or entry.get('key') != key or 'value' not in entry:
            logger.warning('Corrupt cache entry %s; recomputing', path)
            return None
        if entry.get('schema') != self.schema_version:
            logger.debug('Stale cache entry %s (schema %s)', path, entry.get('schema'))
            return None
        return entry['value']

    def _write(self, key, value):
        path = self.path_for(key)
        directory = os.path.dirname(path)
        os.makedirs(directory, exist_ok=True)
        entry = {'schema': self.schema_version, 'key': key, 'value': value}
        fd, tmp = tempfile.mkstemp(dir=directory, suffix='.tmp')
        try:
            with os.fdopen(fd, 'w', encoding='utf-8') as handle:
                json.dump(entry, handle, sort_keys=True)
            os.replace(tmp, path)
        except OSError:
            if os.path.exists(tmp):
                os.remove(tmp)
            raise

    def get_or_compute(self, operation, parameters, compute):
        """Cached JSON-serialisable value of compute() for (operation, parameters)"""
        if not self.enabled:
            self.stats['computed'] += 1
            return compute()
        key = cache_key(operation, parameters)
        value = self._read(key)
        if value is not None:
            self.stats['hits'] += 1
            logger.debug('Cache hit for %s %s', operation, key[:12])
            return value
        self.stats['misses'] += 1
        value = compute()
        self.stats['computed'] += 1
        self._write(key, value)
        return value
