#pragma once

#define DISTREG_VERSION "0.1.0"
