import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'fbvp_project.settings')
django.setup()
