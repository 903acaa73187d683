// Copyright 2026 the ocuverify authors.
// Licensed under the Apache License, Version 2.0. See LICENSE for details.

#ifndef OCUVER_OCUVER_HPP
#define OCUVER_OCUVER_HPP

#include "ocuver/dataset.hpp"
#include "ocuver/embedding_db.hpp"
#include "ocuver/errors.hpp"
#include "ocuver/forensics.hpp"
#include "ocuver/image.hpp"
#include "ocuver/jpeg.hpp"
#include "ocuver/losses.hpp"
#include "ocuver/network.hpp"
#include "ocuver/pipeline.hpp"
#include "ocuver/preprocess.hpp"
#include "ocuver/rng.hpp"
#include "ocuver/runconfig.hpp"
#include "ocuver/synthdata.hpp"
#include "ocuver/tensor.hpp"
#include "ocuver/trainer.hpp"

#endif // OCUVER_OCUVER_HPP
