// Copyright 2026 the ocuverify authors.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#define CATCH_CONFIG_MAIN
#include <catch2/catch.hpp>
