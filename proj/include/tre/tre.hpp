#pragma once

#include "tre/entropy.hpp"
#include "tre/error.hpp"
#include "tre/kahan.hpp"
#include "tre/models.hpp"
#include "tre/ngram.hpp"
#include "tre/sequence.hpp"
#include "tre/synth.hpp"
#include "tre/tuple_key.hpp"
