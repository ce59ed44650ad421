package com.acme.store;

import java.util.Optional;

/**
 * Key/value access to persisted module state.
 */
public interface Store {
    String get(String key);

    void put(String key, String value);

    default Optional<String> find(String key) {
        return Optional.ofNullable(get(key));
    }
}
